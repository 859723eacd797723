// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/ait.hpp"

#include <cmath>
#include <stdexcept>

#include "linvoc/kv.hpp"
#include "linvoc/rng.hpp"

namespace linvoc::ait {
namespace {

template <typename T>
Tensor<T> he_uniform(Shape shape, std::int64_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(u(rng));
  return t;
}

template <typename T>
void add_linear(ParamSet<T>& ps, const std::string& prefix, int in, int out, Rng& rng, bool zero = false) {
  ps.add(prefix + ".w", zero ? Tensor<T>(Shape{in, out}) : he_uniform<T>(Shape{in, out}, in, rng));
  ps.add(prefix + ".b", Tensor<T>(Shape{out}));
}

template <typename T>
void add_conv(ParamSet<T>& ps, const std::string& prefix, int cout, int cin, int k, Rng& rng, bool zero = false) {
  ps.add(prefix + ".w", zero ? Tensor<T>(Shape{cout, cin, k}) : he_uniform<T>(Shape{cout, cin, k}, cin * k, rng));
  ps.add(prefix + ".b", Tensor<T>(Shape{cout}));
}

template <typename T>
void add_scaled_conv(ParamSet<T>& ps, const std::string& prefix, int cout, int cin, int k, double gain, Rng& rng) {
  auto w = he_uniform<T>(Shape{cout, cin, k}, cin * k, rng);
  for (auto& v : w.values()) v = static_cast<T>(v * gain);
  ps.add(prefix + ".w", std::move(w));
  ps.add(prefix + ".b", Tensor<T>(Shape{cout}));
}

template <typename T>
void add_taln(ParamSet<T>& ps, const std::string& prefix, int h) {
  ps.add(prefix + ".g.w", Tensor<T>(Shape{h, h}));
  ps.add(prefix + ".g.b", Tensor<T>(Shape{h}, T(1)));
  ps.add(prefix + ".b.w", Tensor<T>(Shape{h, h}));
  ps.add(prefix + ".b.b", Tensor<T>(Shape{h}));
}

template <typename T>
ad::Var<T> conv(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& x, int padding, int dilation = 1) {
  return ad::conv1d(x, bind(prefix + ".w"), std::optional<ad::Var<T>>(bind(prefix + ".b")),
                    ad::Conv1dOptions{1, padding, dilation, 1});
}

// Rows of [N, H] -> [heads, N, dh].
template <typename T>
ad::Var<T> split_heads(const ad::Var<T>& x, int heads) {
  const auto n = x.shape()[0], h = x.shape()[1];
  return ad::transpose(ad::reshape(x, Shape{n, heads, h / heads}), {1, 0, 2});
}

template <typename T>
ad::Var<T> merge_heads(const ad::Var<T>& x) {
  const auto heads = x.shape()[0], n = x.shape()[1], dh = x.shape()[2];
  return ad::reshape(ad::transpose(x, {1, 0, 2}), Shape{n, heads * dh});
}

template <typename T>
ad::Var<T> kernel_trunk(ParamBinder<T>& bind, const ad::Var<T>& mel_hidden, const ad::Var<T>& t_emb) {
  const auto h = t_emb.shape()[0];
  auto t = linear(bind, "post.kp.t", ad::reshape(t_emb, Shape{1, h}));
  auto cond = ad::add(mel_hidden, ad::reshape(t, Shape{h}));
  return ad::leaky_relu(conv(bind, "post.kp.in", ad::transpose(cond, {1, 0}), 1), T(0.2));
}

template <typename T>
std::pair<ad::Var<T>, ad::Var<T>> lvc_heads(ParamBinder<T>& bind, const ad::Var<T>& trunk, int layer,
                                            const DenoiserConfig& cfg) {
  const std::string p = "post.kp" + std::to_string(layer);
  const auto frames = trunk.shape()[1];
  const int c = cfg.postconv_channels, k = cfg.lvc_kernel;
  auto kern = ad::transpose(conv(bind, p + ".k", trunk, 0), {1, 0});     // [F, C*C*K]
  auto bias = ad::transpose(conv(bind, p + ".bias", trunk, 0), {1, 0});  // [F, C]
  return {ad::reshape(kern, Shape{frames, c, c, k}), bias};
}

int lvc_dilation(int layer) {
  int d = 1;
  for (int i = 0; i < layer; ++i) d *= 3;
  return d;
}

}  // namespace

void DenoiserConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("denoiser config: " + m); };
  if (patch_size < 1 || dsp::kFrameHop % patch_size != 0) fail("patch_size must divide 256");
  if (hidden_dim < 2 || hidden_dim % 2 != 0) fail("hidden_dim must be even and >= 2");
  if (n_heads < 1 || hidden_dim % n_heads != 0) fail("hidden_dim must be divisible by n_heads");
  if (n_layers < 0) fail("n_layers must be >= 0");
  if (step_pe_dim < 2 || step_pe_dim % 2 != 0) fail("step_pe_dim must be even");
  if (postconv_channels < 1) fail("postconv_channels must be >= 1");
  if (lvc_kernel < 1 || lvc_kernel % 2 == 0) fail("lvc_kernel must be odd");
  if (lvc_layers < 0) fail("lvc_layers must be >= 0");
  if (max_tokens < 1) fail("max_tokens must be >= 1");
  if (mlp_kernel < 1 || mlp_kernel % 2 == 0) fail("mlp_kernel must be odd");
  if (mlp_expansion < 1) fail("mlp_expansion must be >= 1");
}

std::map<std::string, std::string> to_kv(const DenoiserConfig& c) {
  return {{"patch_size", std::to_string(c.patch_size)},
          {"hidden_dim", std::to_string(c.hidden_dim)},
          {"n_layers", std::to_string(c.n_layers)},
          {"n_heads", std::to_string(c.n_heads)},
          {"step_pe_dim", std::to_string(c.step_pe_dim)},
          {"postconv_channels", std::to_string(c.postconv_channels)},
          {"lvc_kernel", std::to_string(c.lvc_kernel)},
          {"lvc_layers", std::to_string(c.lvc_layers)},
          {"max_tokens", std::to_string(c.max_tokens)},
          {"mlp_kernel", std::to_string(c.mlp_kernel)},
          {"mlp_expansion", std::to_string(c.mlp_expansion)}};
}

DenoiserConfig denoiser_config_from_kv(const std::map<std::string, std::string>& kv, const DenoiserConfig& base) {
  DenoiserConfig c = base;
  kv_get(kv, "patch_size", c.patch_size);
  kv_get(kv, "hidden_dim", c.hidden_dim);
  kv_get(kv, "n_layers", c.n_layers);
  kv_get(kv, "n_heads", c.n_heads);
  kv_get(kv, "step_pe_dim", c.step_pe_dim);
  kv_get(kv, "postconv_channels", c.postconv_channels);
  kv_get(kv, "lvc_kernel", c.lvc_kernel);
  kv_get(kv, "lvc_layers", c.lvc_layers);
  kv_get(kv, "max_tokens", c.max_tokens);
  kv_get(kv, "mlp_kernel", c.mlp_kernel);
  kv_get(kv, "mlp_expansion", c.mlp_expansion);
  c.validate();
  return c;
}

template <typename T>
Tensor<T> patchify(const Tensor<T>& x, int patch) {
  if (x.rank() != 1) throw std::invalid_argument("patchify: expected a 1-D signal");
  if (patch < 1 || x.size() % patch != 0) {
    throw std::invalid_argument("patchify: length " + std::to_string(x.size()) + " not divisible by patch " +
                                std::to_string(patch));
  }
  return x.reshaped(Shape{x.size() / patch, patch});
}

template <typename T>
Tensor<T> depatchify(const Tensor<T>& tokens) {
  if (tokens.rank() != 2) throw std::invalid_argument("depatchify: expected [tokens, patch]");
  return tokens.reshaped(Shape{tokens.size()});
}

std::vector<double> step_encoding(int t_index, int dim) {
  if (t_index < 0) throw std::invalid_argument("step index must be >= 0");
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("encoding dim must be even");
  std::vector<double> pe(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim);
    pe[static_cast<std::size_t>(2 * i)] = std::sin(t_index * freq);
    pe[static_cast<std::size_t>(2 * i + 1)] = std::cos(t_index * freq);
  }
  return pe;
}

template <typename T>
Tensor<T> position_codes(std::int64_t rows, int dim, int stride) {
  Tensor<T> out(Shape{rows, dim});
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto pe = step_encoding(static_cast<int>(r * stride), dim);
    for (int j = 0; j < dim; ++j) out[r * dim + j] = static_cast<T>(pe[static_cast<std::size_t>(j)]);
  }
  return out;
}

template <typename T>
ad::Var<T> linear(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& x) {
  return ad::add(ad::matmul(x, bind(prefix + ".w")), bind(prefix + ".b"));
}

template <typename T>
ad::Var<T> step_embedding(ParamBinder<T>& bind, int t_index, int pe_dim) {
  const auto pe = step_encoding(t_index, pe_dim);
  Tensor<T> row(Shape{1, pe_dim});
  for (int i = 0; i < pe_dim; ++i) row[i] = static_cast<T>(pe[static_cast<std::size_t>(i)]);
  auto e = linear(bind, "step", bind.graph().constant(std::move(row)));
  return ad::reshape(e, Shape{e.shape()[1]});
}

template <typename T>
ad::Var<T> taln(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& x, const ad::Var<T>& t_emb) {
  const auto h = t_emb.shape()[0];
  if (x.shape().back() != h) {
    throw std::invalid_argument("taln: channel mismatch " + shape_str(x.shape()) + " vs step embedding " +
                                shape_str(t_emb.shape()));
  }
  auto te = ad::reshape(t_emb, Shape{1, h});
  auto g = ad::reshape(linear(bind, prefix + ".g", te), Shape{h});
  auto b = ad::reshape(linear(bind, prefix + ".b", te), Shape{h});
  return ad::add(ad::mul(ad::layer_norm(x, T(1e-5)), g), b);
}

template <typename T>
ad::Var<T> attention(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& q_in,
                     const ad::Var<T>& kv_in, int n_heads, bool self, ad::Var<T>* weights) {
  const auto h = q_in.shape()[1];
  if (kv_in.shape()[1] != h || h % n_heads != 0) throw std::invalid_argument("attention: dimension mismatch");
  ad::Var<T> q, k, v;
  if (self) {
    auto qkv = linear(bind, prefix + ".qkv", q_in);
    q = ad::slice(qkv, 1, 0, h);
    k = ad::slice(qkv, 1, h, h);
    v = ad::slice(qkv, 1, 2 * h, h);
  } else {
    q = linear(bind, prefix + ".q", q_in);
    auto kv = linear(bind, prefix + ".kv", kv_in);
    k = ad::slice(kv, 1, 0, h);
    v = ad::slice(kv, 1, h, h);
  }
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(h / n_heads));
  auto scores = ad::scale(ad::matmul(split_heads(q, n_heads), split_heads(k, n_heads), false, true), inv_sqrt);
  auto attn = ad::softmax(scores);
  if (weights) *weights = attn;
  auto ctx = merge_heads(ad::matmul(attn, split_heads(v, n_heads)));
  return linear(bind, prefix + ".out", ctx);
}

template <typename T>
ad::Var<T> conv_mlp(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& x, const DenoiserConfig& cfg) {
  const int pad = cfg.mlp_kernel / 2;
  auto ch = ad::transpose(x, {1, 0});
  auto hidden = ad::gelu(conv(bind, prefix + ".conv1", ch, pad));
  return ad::transpose(conv(bind, prefix + ".conv2", hidden, pad), {1, 0});
}

template <typename T>
ad::Var<T> ait_block(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& tokens,
                     const ad::Var<T>& mel_hidden, const ad::Var<T>& t_emb, const DenoiserConfig& cfg) {
  if (tokens.shape()[0] > cfg.max_tokens) {
    throw std::invalid_argument("token overflow: " + std::to_string(tokens.shape()[0]) + " > max_tokens " +
                                std::to_string(cfg.max_tokens));
  }
  auto x = tokens;
  auto a = taln(bind, prefix + ".ln1", x, t_emb);
  x = ad::add(x, attention(bind, prefix + ".self", a, a, cfg.n_heads, true));
  auto c = taln(bind, prefix + ".ln2", x, t_emb);
  x = ad::add(x, attention(bind, prefix + ".cross", c, mel_hidden, cfg.n_heads, false));
  auto m = taln(bind, prefix + ".ln3", x, t_emb);
  return ad::add(x, conv_mlp(bind, prefix + ".mlp", m, cfg));
}

template <typename T>
std::pair<ad::Var<T>, ad::Var<T>> predict_lvc_kernels(ParamBinder<T>& bind, const ad::Var<T>& mel_hidden,
                                                      const ad::Var<T>& t_emb, int layer, const DenoiserConfig& cfg) {
  return lvc_heads(bind, kernel_trunk(bind, mel_hidden, t_emb), layer, cfg);
}

template <typename T>
ad::Var<T> post_conv(ParamBinder<T>& bind, const ad::Var<T>& x_est, const ad::Var<T>& mel_hidden,
                     const ad::Var<T>& t_emb, const DenoiserConfig& cfg) {
  const auto len = x_est.shape()[0];
  const auto frames = mel_hidden.shape()[0];
  if (len != frames * dsp::kFrameHop) {
    throw std::invalid_argument("post_conv: waveform length " + std::to_string(len) + " does not match " +
                                std::to_string(frames) + " frames");
  }
  const T slope = T(0.2);
  auto h = conv(bind, "post.in", ad::reshape(x_est, Shape{1, len}), 1);
  auto trunk = kernel_trunk(bind, mel_hidden, t_emb);
  for (int l = 0; l < cfg.lvc_layers; ++l) {
    auto [kern, bias] = lvc_heads(bind, trunk, l, cfg);
    h = ad::add(h, ad::location_variable_conv(ad::leaky_relu(h, slope), kern, bias, dsp::kFrameHop, lvc_dilation(l)));
    h = ad::add(h, conv(bind, "post.conv" + std::to_string(l), ad::leaky_relu(h, slope), 1));
  }
  auto out = conv(bind, "post.out", ad::leaky_relu(h, slope), 1);
  return ad::add(x_est, ad::reshape(out, Shape{len}));
}

template <typename T>
Denoiser<T>::Denoiser(DenoiserConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(seed, "denoiser-init"));
  const int h = cfg_.hidden_dim, p = cfg_.patch_size, c = cfg_.postconv_channels, k = cfg_.lvc_kernel;
  add_linear(params_, "step", cfg_.step_pe_dim, h, rng);
  add_linear(params_, "patch", p, h, rng);
  add_linear(params_, "mel", dsp::kMelBands, h, rng);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string b = "block" + std::to_string(l);
    add_taln(params_, b + ".ln1", h);
    add_linear(params_, b + ".self.qkv", h, 3 * h, rng);
    add_linear(params_, b + ".self.out", h, h, rng, true);
    add_taln(params_, b + ".ln2", h);
    add_linear(params_, b + ".cross.q", h, h, rng);
    add_linear(params_, b + ".cross.kv", h, 2 * h, rng);
    add_linear(params_, b + ".cross.out", h, h, rng, true);
    add_taln(params_, b + ".ln3", h);
    add_conv(params_, b + ".mlp.conv1", cfg_.mlp_expansion * h, h, cfg_.mlp_kernel, rng);
    add_conv(params_, b + ".mlp.conv2", h, cfg_.mlp_expansion * h, cfg_.mlp_kernel, rng, true);
  }
  add_taln(params_, "final.ln", h);
  add_linear(params_, "depatch", h, p, rng);
  add_conv(params_, "post.in", c, 1, 3, rng);
  add_linear(params_, "post.kp.t", h, h, rng);
  add_conv(params_, "post.kp.in", h, h, 3, rng);
  for (int l = 0; l < cfg_.lvc_layers; ++l) {
    const std::string kp = "post.kp" + std::to_string(l);
    // Predicted kernels start at He scale for their own fan-in (C x K).
    const double gain = 1.0 / std::sqrt(static_cast<double>(c * k));
    add_scaled_conv(params_, kp + ".k", c * c * k, h, 1, gain, rng);
    add_scaled_conv(params_, kp + ".bias", c, h, 1, gain, rng);
    add_conv(params_, "post.conv" + std::to_string(l), c, c, 3, rng);
  }
  add_conv(params_, "post.out", 1, c, 3, rng, true);
}

template <typename T>
void Denoiser<T>::check_inputs(std::int64_t len, const Tensor<T>& mel) const {
  if (mel.rank() != 2 || mel.dim(1) != dsp::kMelBands || mel.dim(0) < 1) {
    throw std::invalid_argument("denoiser: condition must be [frames >= 1, 80], got " + shape_str(mel.shape()));
  }
  if (len != mel.dim(0) * dsp::kFrameHop) {
    throw std::invalid_argument("denoiser: waveform length " + std::to_string(len) + " != 256 x " +
                                std::to_string(mel.dim(0)) + " frames");
  }
  if (len / cfg_.patch_size > cfg_.max_tokens) {
    throw std::invalid_argument("token overflow: " + std::to_string(len / cfg_.patch_size) + " tokens > max_tokens " +
                                std::to_string(cfg_.max_tokens));
  }
}

template <typename T>
ad::Var<T> Denoiser<T>::mel_hidden(ParamBinder<T>& bind, const Tensor<T>& mel) const {
  auto& g = bind.graph();
  auto hidden = ad::layer_norm(linear(bind, "mel", g.constant(mel)), T(1e-5));
  return ad::add(hidden, g.constant(position_codes<T>(mel.dim(0), cfg_.hidden_dim, cfg_.tokens_per_frame())));
}

template <typename T>
ad::Var<T> Denoiser<T>::forward(ParamBinder<T>& bind, const ad::Var<T>& x_t, const Tensor<T>& mel,
                                int t_index) const {
  if (x_t.shape().size() != 1) throw std::invalid_argument("denoiser: x_t must be 1-D");
  const auto len = x_t.shape()[0];
  check_inputs(len, mel);
  auto& g = bind.graph();
  const int p = cfg_.patch_size;
  const auto n_tok = len / p;

  auto t_emb = step_embedding(bind, t_index, cfg_.step_pe_dim);
  auto mel_h = mel_hidden(bind, mel);
  auto tokens = linear(bind, "patch", ad::reshape(x_t, Shape{n_tok, p}));
  tokens = ad::add(tokens, g.constant(position_codes<T>(n_tok, cfg_.hidden_dim, 1)));
  for (int l = 0; l < cfg_.n_layers; ++l) {
    tokens = ait_block(bind, "block" + std::to_string(l), tokens, mel_h, t_emb, cfg_);
  }
  auto est = linear(bind, "depatch", taln(bind, "final.ln", tokens, t_emb));
  return post_conv(bind, ad::reshape(est, Shape{len}), mel_h, t_emb, cfg_);
}

template <typename T>
Tensor<T> Denoiser<T>::predict(const Tensor<T>& x_t, const dsp::MelCondition& c, int t_index) const {
  ad::Graph<T> g;
  ParamBinder<T> bind(g, params_);
  return forward(bind, g.constant(x_t), c.frames.template cast<T>(), t_index).value();
}

template class Denoiser<float>;
template class Denoiser<double>;

#define LINVOC_INSTANTIATE_AIT(T)                                                                                  \
  template Tensor<T> patchify(const Tensor<T>&, int);                                                              \
  template Tensor<T> depatchify(const Tensor<T>&);                                                                 \
  template Tensor<T> position_codes(std::int64_t, int, int);                                                       \
  template ad::Var<T> linear(ParamBinder<T>&, const std::string&, const ad::Var<T>&);                              \
  template ad::Var<T> step_embedding(ParamBinder<T>&, int, int);                                                   \
  template ad::Var<T> taln(ParamBinder<T>&, const std::string&, const ad::Var<T>&, const ad::Var<T>&);             \
  template ad::Var<T> attention(ParamBinder<T>&, const std::string&, const ad::Var<T>&, const ad::Var<T>&, int,    \
                                bool, ad::Var<T>*);                                                                \
  template ad::Var<T> conv_mlp(ParamBinder<T>&, const std::string&, const ad::Var<T>&, const DenoiserConfig&);     \
  template ad::Var<T> ait_block(ParamBinder<T>&, const std::string&, const ad::Var<T>&, const ad::Var<T>&,         \
                                const ad::Var<T>&, const DenoiserConfig&);                                         \
  template std::pair<ad::Var<T>, ad::Var<T>> predict_lvc_kernels(ParamBinder<T>&, const ad::Var<T>&,               \
                                                                 const ad::Var<T>&, int, const DenoiserConfig&);   \
  template ad::Var<T> post_conv(ParamBinder<T>&, const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&,          \
                                const DenoiserConfig&);

LINVOC_INSTANTIATE_AIT(float)
LINVOC_INSTANTIATE_AIT(double)

}  // namespace linvoc::ait
