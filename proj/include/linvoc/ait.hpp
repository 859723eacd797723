// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Patch-token transformer denoiser f(x_t, mel, t).
//
//   x_t [L] -> patches [L/P, P] -> linear -> + position codes
//           -> n_layers x { TALN -> self-attn, TALN -> cross-attn(mel), TALN -> conv MLP }
//           -> TALN -> linear -> [L] -> post-conv refinement (location-variable conv)
//
// TALN(x, t_emb) = g(t_emb) * LayerNorm(x) + b(t_emb), with g/b linear maps of
// the step embedding, initialised to emit 1 and 0.

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "linvoc/dsp.hpp"
#include "linvoc/ops.hpp"
#include "linvoc/params.hpp"

namespace linvoc::ait {

struct DenoiserConfig {
  int patch_size = 64;
  int hidden_dim = 256;
  int n_layers = 4;
  int n_heads = 4;
  int step_pe_dim = 128;
  int postconv_channels = 32;
  int lvc_kernel = 3;
  int lvc_layers = 2;
  int max_tokens = 3600;
  int mlp_kernel = 3;
  int mlp_expansion = 4;

  /// Throws std::invalid_argument when inconsistent.
  void validate() const;
  int tokens_per_frame() const { return dsp::kFrameHop / patch_size; }
};

/// Flat "key = value" form used next to checkpoints.
std::map<std::string, std::string> to_kv(const DenoiserConfig& cfg);
DenoiserConfig denoiser_config_from_kv(const std::map<std::string, std::string>& kv,
                                       const DenoiserConfig& base = {});

/// [len] -> [len/patch, patch]; throws when len is not divisible.
template <typename T> Tensor<T> patchify(const Tensor<T>& x, int patch);
template <typename T> Tensor<T> depatchify(const Tensor<T>& tokens);

/// Sinusoidal step code: pe[2i] = sin(t / 10000^(2i/dim)), pe[2i+1] = cos(...).
std::vector<double> step_encoding(int t_index, int dim);
/// Row r is the sinusoidal code of position r * stride, [rows, dim].
template <typename T> Tensor<T> position_codes(std::int64_t rows, int dim, int stride);

// Building blocks. `prefix` names the parameter group inside the binder's set.

template <typename T>
ad::Var<T> linear(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& x);

/// Step embedding t_emb [H] from an integer step index.
template <typename T>
ad::Var<T> step_embedding(ParamBinder<T>& bind, int t_index, int pe_dim);

template <typename T>
ad::Var<T> taln(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& x, const ad::Var<T>& t_emb);

/// Multi-head attention; queries from `q_in` [N, H], keys/values from
/// `kv_in` [M, H]. If `weights` is non-null it receives the [heads, N, M]
/// attention matrix.
template <typename T>
ad::Var<T> attention(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& q_in,
                     const ad::Var<T>& kv_in, int n_heads, bool self, ad::Var<T>* weights = nullptr);

template <typename T>
ad::Var<T> conv_mlp(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& x, const DenoiserConfig& cfg);

/// One transformer block with residuals around each of its three sub-layers.
template <typename T>
ad::Var<T> ait_block(ParamBinder<T>& bind, const std::string& prefix, const ad::Var<T>& tokens,
                     const ad::Var<T>& mel_hidden, const ad::Var<T>& t_emb, const DenoiserConfig& cfg);

/// Per-frame LVC kernels [F, C, C, K] and biases [F, C] for layer `layer`.
template <typename T>
std::pair<ad::Var<T>, ad::Var<T>> predict_lvc_kernels(ParamBinder<T>& bind, const ad::Var<T>& mel_hidden,
                                                      const ad::Var<T>& t_emb, int layer, const DenoiserConfig& cfg);

/// Waveform-rate refinement: x_est [L] -> x_est + correction [L].
template <typename T>
ad::Var<T> post_conv(ParamBinder<T>& bind, const ad::Var<T>& x_est, const ad::Var<T>& mel_hidden,
                     const ad::Var<T>& t_emb, const DenoiserConfig& cfg);

template <typename T>
class Denoiser {
 public:
  explicit Denoiser(DenoiserConfig cfg, std::uint64_t seed = 0);

  const DenoiserConfig& config() const { return cfg_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  /// Mel hidden sequence [F, H]: layer-normalised linear map of the log-mel
  /// frames plus position codes aligned to token positions.
  ad::Var<T> mel_hidden(ParamBinder<T>& bind, const Tensor<T>& mel) const;

  /// Clean-waveform prediction with the same shape as x_t [L], L = 256 x frames.
  ad::Var<T> forward(ParamBinder<T>& bind, const ad::Var<T>& x_t, const Tensor<T>& mel, int t_index) const;

  /// Graph-free convenience for sampling.
  Tensor<T> predict(const Tensor<T>& x_t, const dsp::MelCondition& c, int t_index) const;

 private:
  void check_inputs(std::int64_t len, const Tensor<T>& mel) const;

  DenoiserConfig cfg_;
  ParamSet<T> params_;
};

extern template class Denoiser<float>;
extern template class Denoiser<double>;

}  // namespace linvoc::ait
