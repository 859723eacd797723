// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/objectives.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace linvoc::objectives {
namespace {

constexpr double kMagnitudeFloor = 1e-9;

template <typename T>
void require_same_shape(const ad::Var<T>& a, const ad::Var<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

template <typename T>
ad::Var<T> mean_of(const std::vector<ad::Var<T>>& terms) {
  if (terms.empty()) throw std::invalid_argument("adversarial loss needs at least one score");
  std::vector<ad::Var<T>> flat;
  for (const auto& t : terms) {
    if (t.size() != 1) throw std::invalid_argument("adversarial loss: scores must be scalars");
    flat.push_back(ad::reshape(t, Shape{1}));
  }
  return ad::mean(ad::concat(flat, 0));
}

}  // namespace

void StftBank::validate() const {
  for (const auto& c : configs) c.validate();
}

int StftBank::draw(Rng& rng) const {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(configs.size()) - 1);
  return pick(rng);
}

template <typename T>
ad::Var<T> diffusion_loss(const ad::Var<T>& x_hat, const ad::Var<T>& x_data) {
  require_same_shape(x_hat, x_data, "diffusion loss");
  return ad::mean(ad::square(ad::sub(x_hat, x_data)));
}

template <typename T>
ad::Var<T> stft_magnitude(const ad::Var<T>& x, const dsp::SpectrogramConfig& cfg) {
  cfg.validate();
  if (x.shape().size() != 1) throw std::invalid_argument("stft: expected a 1-D waveform");
  if (x.shape()[0] < cfg.win_length) {
    throw std::invalid_argument("stft: waveform of " + std::to_string(x.shape()[0]) +
                                " samples is shorter than the " + std::to_string(cfg.win_length) + "-sample window");
  }
  const auto basis = dsp::dft_basis<T>(cfg);
  auto& g = *x.graph;
  auto frames = ad::frame(x, cfg.n_fft, cfg.hop_length);
  auto re = ad::matmul(frames, g.constant(basis->re));
  auto im = ad::matmul(frames, g.constant(basis->im));
  return ad::sqrt(ad::add_scalar(ad::add(ad::square(re), ad::square(im)), static_cast<T>(kMagnitudeFloor)));
}

template <typename T>
ad::Var<T> stft_loss_at(const ad::Var<T>& x_hat, const ad::Var<T>& x_data, const dsp::SpectrogramConfig& cfg) {
  require_same_shape(x_hat, x_data, "stft loss");
  const double energy = dsp::dft_basis<T>(cfg)->window_energy;
  auto diff = ad::sub(stft_magnitude(x_hat, cfg), stft_magnitude(x_data, cfg));
  return ad::scale(ad::mean(ad::square(diff)), static_cast<T>(1.0 / energy));
}

template <typename T>
ad::Var<T> stft_loss(const ad::Var<T>& x_hat, const ad::Var<T>& x_data, const StftBank& bank, Rng& rng,
                     int* chosen) {
  const int idx = bank.draw(rng);
  if (chosen) *chosen = idx;
  return stft_loss_at(x_hat, x_data, bank.configs[static_cast<std::size_t>(idx)]);
}

template <typename T>
ad::Var<T> adv_loss_generator(const std::vector<ad::Var<T>>& scores_fake) {
  std::vector<ad::Var<T>> terms;
  for (const auto& s : scores_fake) terms.push_back(ad::square(ad::add_scalar(ad::scale(s, T(-1)), T(1))));
  return mean_of(terms);
}

template <typename T>
ad::Var<T> adv_loss_discriminator(const std::vector<ad::Var<T>>& scores_fake,
                                  const std::vector<ad::Var<T>>& scores_real) {
  if (scores_fake.size() != scores_real.size()) {
    throw std::invalid_argument("discriminator loss: fake and real score counts differ");
  }
  std::vector<ad::Var<T>> terms;
  for (std::size_t i = 0; i < scores_fake.size(); ++i) {
    terms.push_back(ad::add(ad::square(scores_fake[i]),
                            ad::square(ad::add_scalar(ad::scale(scores_real[i], T(-1)), T(1)))));
  }
  return mean_of(terms);
}

StageWeights stage_weights(int stage) {
  switch (stage) {
    case 1: return {0.0, 1.0, 1.0};
    case 2: return {1.0, 1.0, 1.0};
    case 3: return {0.2, 1.0, 1.0};
    default: throw std::invalid_argument("unknown training stage " + std::to_string(stage));
  }
}

template <typename T>
ad::Var<T> total_generator_loss(const ad::Var<T>& l_adv_g, const ad::Var<T>& l_s, const ad::Var<T>& l_diff,
                                int stage) {
  const auto w = stage_weights(stage);
  auto base = ad::add(ad::scale(l_s, static_cast<T>(w.stft)), ad::scale(l_diff, static_cast<T>(w.diff)));
  if (w.adv == 0.0) return base;
  return ad::add(ad::scale(l_adv_g, static_cast<T>(w.adv)), base);
}

double total_generator_loss(double l_adv_g, double l_s, double l_diff, int stage) {
  const auto w = stage_weights(stage);
  return (w.adv == 0.0 ? 0.0 : w.adv * l_adv_g) + w.stft * l_s + w.diff * l_diff;
}

bool LossReport::all_finite() const {
  return std::isfinite(l_diff) && std::isfinite(l_s) && std::isfinite(l_adv_g) && std::isfinite(l_adv_d) &&
         std::isfinite(l_gen);
}

std::string csv_header() { return "step,stage,l_diff,l_s,l_adv_g,l_adv_d,l_gen,stft_cfg_index"; }

std::string csv_row(const LossReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d", static_cast<long long>(r.step), r.stage,
                r.l_diff, r.l_s, r.l_adv_g, r.l_adv_d, r.l_gen, r.stft_cfg_index);
  return buf;
}

#define LINVOC_INSTANTIATE_OBJECTIVES(T)                                                                       \
  template ad::Var<T> diffusion_loss(const ad::Var<T>&, const ad::Var<T>&);                                    \
  template ad::Var<T> stft_magnitude(const ad::Var<T>&, const dsp::SpectrogramConfig&);                       \
  template ad::Var<T> stft_loss_at(const ad::Var<T>&, const ad::Var<T>&, const dsp::SpectrogramConfig&);      \
  template ad::Var<T> stft_loss(const ad::Var<T>&, const ad::Var<T>&, const StftBank&, Rng&, int*);           \
  template ad::Var<T> adv_loss_generator(const std::vector<ad::Var<T>>&);                                      \
  template ad::Var<T> adv_loss_discriminator(const std::vector<ad::Var<T>>&, const std::vector<ad::Var<T>>&); \
  template ad::Var<T> total_generator_loss(const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&, int);

LINVOC_INSTANTIATE_OBJECTIVES(float)
LINVOC_INSTANTIATE_OBJECTIVES(double)

}  // namespace linvoc::objectives
