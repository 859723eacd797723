// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Discriminator ensemble: one spectral critic over a log-magnitude STFT, a
// multi-scale critic (average-pooled views) and a multi-period critic
// (2-D period views). Every member emits one scalar score per view.

#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "linvoc/dsp.hpp"
#include "linvoc/ops.hpp"
#include "linvoc/params.hpp"

namespace linvoc::critics {

struct CriticConfig {
  std::vector<int> msd_scales{1, 2};
  std::vector<int> mpd_periods{2, 3};
  dsp::SpectrogramConfig spectral_cfg{512, 512, 128};
  /// Channels of the four conv stages; the multi-scale stack repeats the last.
  std::vector<int> widths{16, 32, 64, 64};

  void validate() const;
  int num_scores() const { return 1 + static_cast<int>(msd_scales.size() + mpd_periods.size()); }
};

/// Named scalar scores, one per sub-discriminator view.
template <typename T>
struct CriticScores {
  std::vector<std::string> names;
  std::vector<ad::Var<T>> scores;

  std::size_t size() const { return scores.size(); }
  std::vector<double> values() const;
};

/// x [L] -> [p, ceil(L/p)] with row r holding x[r + p*j]; the tail is zero padded.
template <typename T>
ad::Var<T> period_view(const ad::Var<T>& x, int period);

template <typename T>
ad::Var<T> spectral_critic(ParamBinder<T>& bind, const ad::Var<T>& w, const CriticConfig& cfg);
template <typename T>
std::vector<ad::Var<T>> msd_critic(ParamBinder<T>& bind, const ad::Var<T>& w, const CriticConfig& cfg);
template <typename T>
std::vector<ad::Var<T>> mpd_critic(ParamBinder<T>& bind, const ad::Var<T>& w, const CriticConfig& cfg);

template <typename T>
class CriticEnsemble {
 public:
  explicit CriticEnsemble(CriticConfig cfg, std::uint64_t seed = 0);

  const CriticConfig& config() const { return cfg_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  /// All sub-scores for waveform w [L]: spectral, then scales, then periods.
  CriticScores<T> operator()(ParamBinder<T>& bind, const ad::Var<T>& w) const;

  /// Number of ensemble evaluations so far.
  std::int64_t calls() const { return calls_.load(); }

 private:
  CriticConfig cfg_;
  ParamSet<T> params_;
  mutable std::atomic<std::int64_t> calls_{0};
};

extern template class CriticEnsemble<float>;
extern template class CriticEnsemble<double>;

}  // namespace linvoc::critics
