// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/critics.hpp"

#include <cmath>
#include <stdexcept>

#include "linvoc/rng.hpp"

namespace linvoc::critics {
namespace {

constexpr int kMsdStages = 5;
constexpr double kSlope = 0.2;
constexpr double kPowerFloor = 1e-6;

struct Stage1d {
  int kernel, stride;
};
// First stage has a wide receptive field, then strided downsampling.
constexpr Stage1d kMsdLayout[kMsdStages] = {{15, 1}, {5, 4}, {5, 4}, {5, 4}, {5, 1}};
constexpr int kMpdKernel = 5;
constexpr int kMpdStride = 3;

int msd_width(const CriticConfig& cfg, int stage) {
  const auto n = static_cast<int>(cfg.widths.size());
  return cfg.widths[static_cast<std::size_t>(std::min(stage, n - 1))];
}

template <typename T>
Tensor<T> he_uniform(Shape shape, std::int64_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(u(rng));
  return t;
}

template <typename T>
void add_conv(ParamSet<T>& ps, const std::string& name, Shape w_shape, Rng& rng) {
  std::int64_t fan_in = 1;
  for (std::size_t i = 1; i < w_shape.size(); ++i) fan_in *= w_shape[i];
  const auto cout = w_shape[0];
  ps.add(name + ".w", he_uniform<T>(std::move(w_shape), fan_in, rng));
  ps.add(name + ".b", Tensor<T>(Shape{cout}));
}

template <typename T>
ad::Var<T> c1d(ParamBinder<T>& bind, const std::string& name, const ad::Var<T>& x, int kernel, int stride) {
  return ad::conv1d(x, bind(name + ".w"), std::optional<ad::Var<T>>(bind(name + ".b")),
                    ad::Conv1dOptions{stride, kernel / 2, 1, 1});
}

template <typename T>
ad::Var<T> c2d(ParamBinder<T>& bind, const std::string& name, const ad::Var<T>& x, int kh, int kw, int sh,
               int sw) {
  return ad::conv2d(x, bind(name + ".w"), std::optional<ad::Var<T>>(bind(name + ".b")),
                    ad::Conv2dOptions{sh, sw, kh / 2, kw / 2});
}

template <typename T>
void check_waveform(const ad::Var<T>& w) {
  if (w.shape().size() != 1 || w.shape()[0] < 1) {
    throw std::invalid_argument("critic: expected a non-empty 1-D waveform, got " + shape_str(w.shape()));
  }
}

}  // namespace

void CriticConfig::validate() const {
  for (int s : msd_scales) {
    if (s < 1) throw std::invalid_argument("critic config: scales must be >= 1");
  }
  for (int p : mpd_periods) {
    if (p < 2) throw std::invalid_argument("critic config: periods must be >= 2");
  }
  if (widths.size() != 4) throw std::invalid_argument("critic config: exactly four stage widths expected");
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("critic config: widths must be positive");
  }
  spectral_cfg.validate();
}

template <typename T>
std::vector<double> CriticScores<T>::values() const {
  std::vector<double> out;
  for (const auto& s : scores) out.push_back(static_cast<double>(s.value().item()));
  return out;
}

template <typename T>
ad::Var<T> period_view(const ad::Var<T>& x, int period) {
  check_waveform(x);
  if (period < 1) throw std::invalid_argument("period must be >= 1");
  const auto len = x.shape()[0];
  const auto cols = (len + period - 1) / period;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(period * cols));
  for (int r = 0; r < period; ++r) {
    for (std::int64_t j = 0; j < cols; ++j) {
      const auto src = r + static_cast<std::int64_t>(period) * j;
      idx[static_cast<std::size_t>(r * cols + j)] = src < len ? src : -1;
    }
  }
  return ad::gather(x, std::move(idx), Shape{period, cols});
}

template <typename T>
ad::Var<T> spectral_critic(ParamBinder<T>& bind, const ad::Var<T>& w, const CriticConfig& cfg) {
  check_waveform(w);
  const auto& sc = cfg.spectral_cfg;
  if (w.shape()[0] < sc.n_fft) {
    throw std::invalid_argument("spectral critic: waveform of " + std::to_string(w.shape()[0]) +
                                " samples is shorter than the " + std::to_string(sc.n_fft) + "-sample window");
  }
  const auto basis = dsp::dft_basis<T>(sc);
  auto& g = bind.graph();
  auto frames = ad::frame(w, sc.n_fft, sc.hop_length);
  auto re = ad::matmul(frames, g.constant(basis->re));
  auto im = ad::matmul(frames, g.constant(basis->im));
  auto power = ad::add_scalar(ad::add(ad::square(re), ad::square(im)), static_cast<T>(kPowerFloor));
  auto logmag = ad::scale(ad::log(power), T(0.5));
  auto h = ad::reshape(logmag, Shape{1, logmag.shape()[0], logmag.shape()[1]});
  for (int s = 0; s < 4; ++s) {
    h = ad::leaky_relu(c2d(bind, "spectral.conv" + std::to_string(s), h, 3, 3, s == 0 ? 1 : 2, 2),
                       static_cast<T>(kSlope));
  }
  return ad::mean(c2d(bind, "spectral.head", h, 3, 3, 1, 1));
}

template <typename T>
std::vector<ad::Var<T>> msd_critic(ParamBinder<T>& bind, const ad::Var<T>& w, const CriticConfig& cfg) {
  check_waveform(w);
  const auto len = w.shape()[0];
  std::vector<ad::Var<T>> out;
  for (int scale : cfg.msd_scales) {
    if (len % scale != 0) {
      throw std::invalid_argument("multi-scale critic: length " + std::to_string(len) +
                                  " not divisible by scale " + std::to_string(scale));
    }
    const std::string p = "msd" + std::to_string(scale);
    auto h = ad::reshape(w, Shape{1, len});
    if (scale > 1) h = ad::avg_pool1d(h, scale);
    for (int s = 0; s < kMsdStages; ++s) {
      h = ad::leaky_relu(c1d(bind, p + ".conv" + std::to_string(s), h, kMsdLayout[s].kernel, kMsdLayout[s].stride),
                         static_cast<T>(kSlope));
    }
    out.push_back(ad::mean(c1d(bind, p + ".head", h, 3, 1)));
  }
  return out;
}

template <typename T>
std::vector<ad::Var<T>> mpd_critic(ParamBinder<T>& bind, const ad::Var<T>& w, const CriticConfig& cfg) {
  check_waveform(w);
  std::vector<ad::Var<T>> out;
  for (int period : cfg.mpd_periods) {
    if (w.shape()[0] < period) {
      throw std::invalid_argument("multi-period critic: waveform shorter than period " + std::to_string(period));
    }
    const std::string p = "mpd" + std::to_string(period);
    auto view = period_view(w, period);
    auto h = ad::reshape(view, Shape{1, view.shape()[0], view.shape()[1]});
    for (int s = 0; s < 4; ++s) {
      h = ad::leaky_relu(c2d(bind, p + ".conv" + std::to_string(s), h, 1, kMpdKernel, 1, s < 3 ? kMpdStride : 1),
                         static_cast<T>(kSlope));
    }
    out.push_back(ad::mean(c2d(bind, p + ".head", h, 1, 3, 1, 1)));
  }
  return out;
}

template <typename T>
CriticEnsemble<T>::CriticEnsemble(CriticConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(derive_seed(seed, "critic-init"));
  const auto& wd = cfg_.widths;
  int cin = 1;
  for (int s = 0; s < 4; ++s) {
    add_conv(params_, "spectral.conv" + std::to_string(s), Shape{wd[s], cin, 3, 3}, rng);
    cin = wd[static_cast<std::size_t>(s)];
  }
  add_conv(params_, "spectral.head", Shape{1, cin, 3, 3}, rng);
  for (int scale : cfg_.msd_scales) {
    const std::string p = "msd" + std::to_string(scale);
    cin = 1;
    for (int s = 0; s < kMsdStages; ++s) {
      const int cout = msd_width(cfg_, s);
      add_conv(params_, p + ".conv" + std::to_string(s), Shape{cout, cin, kMsdLayout[s].kernel}, rng);
      cin = cout;
    }
    add_conv(params_, p + ".head", Shape{1, cin, 3}, rng);
  }
  for (int period : cfg_.mpd_periods) {
    const std::string p = "mpd" + std::to_string(period);
    cin = 1;
    for (int s = 0; s < 4; ++s) {
      add_conv(params_, p + ".conv" + std::to_string(s), Shape{wd[s], cin, 1, kMpdKernel}, rng);
      cin = wd[static_cast<std::size_t>(s)];
    }
    add_conv(params_, p + ".head", Shape{1, cin, 1, 3}, rng);
  }
}

template <typename T>
CriticScores<T> CriticEnsemble<T>::operator()(ParamBinder<T>& bind, const ad::Var<T>& w) const {
  ++calls_;
  CriticScores<T> out;
  out.names.push_back("spectral");
  out.scores.push_back(spectral_critic(bind, w, cfg_));
  auto ms = msd_critic(bind, w, cfg_);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    out.names.push_back("msd" + std::to_string(cfg_.msd_scales[i]));
    out.scores.push_back(ms[i]);
  }
  auto mp = mpd_critic(bind, w, cfg_);
  for (std::size_t i = 0; i < mp.size(); ++i) {
    out.names.push_back("mpd" + std::to_string(cfg_.mpd_periods[i]));
    out.scores.push_back(mp[i]);
  }
  return out;
}

#define LINVOC_INSTANTIATE_CRITICS(T)                                                                      \
  template struct CriticScores<T>;                                                                         \
  template class CriticEnsemble<T>;                                                                        \
  template ad::Var<T> period_view(const ad::Var<T>&, int);                                                 \
  template ad::Var<T> spectral_critic(ParamBinder<T>&, const ad::Var<T>&, const CriticConfig&);            \
  template std::vector<ad::Var<T>> msd_critic(ParamBinder<T>&, const ad::Var<T>&, const CriticConfig&);    \
  template std::vector<ad::Var<T>> mpd_critic(ParamBinder<T>&, const ad::Var<T>&, const CriticConfig&);

LINVOC_INSTANTIATE_CRITICS(float)
LINVOC_INSTANTIATE_CRITICS(double)

}  // namespace linvoc::critics
