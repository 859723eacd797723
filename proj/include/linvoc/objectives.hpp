// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Training objectives: diffusion MSE, randomised multi-resolution STFT
// magnitude loss, least-squares adversarial pair and the staged total.

#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "linvoc/dsp.hpp"
#include "linvoc/ops.hpp"
#include "linvoc/rng.hpp"

namespace linvoc::objectives {

/// Four (win_length, hop_length, n_fft) analyses; one is drawn per step.
struct StftBank {
  std::array<dsp::SpectrogramConfig, 4> configs{{
      {256, 256, 64},
      {512, 512, 128},
      {1024, 1024, 256},
      {2048, 2048, 512},
  }};

  void validate() const;
  /// Uniform index in [0, 4).
  int draw(Rng& rng) const;
};

template <typename T> ad::Var<T> diffusion_loss(const ad::Var<T>& x_hat, const ad::Var<T>& x_data);

/// Differentiable magnitude STFT of x [L]: [frames, bins].
template <typename T> ad::Var<T> stft_magnitude(const ad::Var<T>& x, const dsp::SpectrogramConfig& cfg);

/// Magnitude MSE under one configuration, divided by the window energy so
/// that every configuration works on a per-sample power scale.
template <typename T>
ad::Var<T> stft_loss_at(const ad::Var<T>& x_hat, const ad::Var<T>& x_data, const dsp::SpectrogramConfig& cfg);

/// Draws a configuration from `bank`; its index is written to *chosen.
template <typename T>
ad::Var<T> stft_loss(const ad::Var<T>& x_hat, const ad::Var<T>& x_data, const StftBank& bank, Rng& rng,
                     int* chosen = nullptr);

/// Mean over sub-discriminators of (1 - score)^2.
template <typename T> ad::Var<T> adv_loss_generator(const std::vector<ad::Var<T>>& scores_fake);
/// Mean over sub-discriminators of fake^2 + (1 - real)^2. The fake scores
/// must come from detached audio.
template <typename T>
ad::Var<T> adv_loss_discriminator(const std::vector<ad::Var<T>>& scores_fake, const std::vector<ad::Var<T>>& scores_real);

struct StageWeights {
  double adv = 0.0;
  double stft = 1.0;
  double diff = 1.0;
};
/// Throws std::invalid_argument unless stage is 1, 2 or 3.
StageWeights stage_weights(int stage);

template <typename T>
ad::Var<T> total_generator_loss(const ad::Var<T>& l_adv_g, const ad::Var<T>& l_s, const ad::Var<T>& l_diff, int stage);
double total_generator_loss(double l_adv_g, double l_s, double l_diff, int stage);

struct LossReport {
  std::int64_t step = 0;
  int stage = 1;
  double l_diff = 0.0;
  double l_s = 0.0;
  double l_adv_g = 0.0;
  double l_adv_d = 0.0;
  double l_gen = 0.0;
  int stft_cfg_index = -1;
  bool d_updated = false;

  bool all_finite() const;
};

std::string csv_header();
/// One CSV line (no newline). Floats are printed with 9 significant digits.
std::string csv_row(const LossReport& r);

}  // namespace linvoc::objectives
