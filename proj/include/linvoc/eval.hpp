// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Objective evaluation: F0 tracking, MCD, V/UV error, F0 correlation,
// NDB/JSD bin statistics and real-time factor.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "linvoc/diffusion.hpp"
#include "linvoc/dsp.hpp"

namespace linvoc::eval {

struct F0Options {
  double f0_min = 50.0;
  double f0_max = 500.0;
  /// Frames whose normalised autocorrelation peak is below this are unvoiced.
  double voicing_threshold = 0.3;
  int frame_length = 1024;
  int hop = dsp::kFrameHop;
  int sample_rate = dsp::kSampleRate;
};

struct F0Track {
  std::vector<double> f0;     // Hz, 0 when unvoiced
  std::vector<bool> voiced;
  int hop = dsp::kFrameHop;

  std::size_t size() const { return f0.size(); }
};

/// One frame per hop (ceil(len/hop) frames); frame f is the window centred
/// on sample f*hop, shifted to lie inside the signal.
F0Track extract_f0(std::span<const float> w, const F0Options& opts = {});

/// Coefficients 1..13 of the orthonormal DCT-II of each log-mel frame, [F, 13].
TensorD mel_cepstra(const TensorF& log_mel);
/// Mean over frames of (10/ln 10) * sqrt(2 * sum_i (a_i - b_i)^2).
double mcd_from_cepstra(const TensorD& a, const TensorD& b);
/// Both signals are analysed with the conditioning mel front end; lengths must
/// match and are truncated to a multiple of 256.
double mcd(std::span<const float> a, std::span<const float> b);

double vuv_error(const F0Track& a, const F0Track& b);
/// Pearson correlation over frames voiced in both tracks.
double f0_corr(const F0Track& a, const F0Track& b);

struct BinModel {
  TensorD centroids;                // [k, dim]
  std::vector<double> proportions;  // occupancy of the fitting set
};

/// Lloyd k-means from k distinct seeded frames, fixed iteration count.
BinModel fit_bins(const TensorD& frames, int k, std::uint64_t seed = 0, int iterations = 50);
/// Nearest centroid per row (lowest index on ties).
std::vector<int> assign_bins(const BinModel& model, const TensorD& frames);

/// Base-2 Jensen-Shannon divergence after adding `smoothing` to every entry
/// and renormalising.
double jsd_bits(const std::vector<double>& p, const std::vector<double>& q, double smoothing = 1e-12);

struct NdbJsd {
  int ndb = 0;
  double jsd = 0.0;
};

/// Bins fitted on the real frames; a bin counts when a two-proportion z-test
/// rejects equal occupancy at level alpha.
NdbJsd ndb_jsd(const TensorD& real_frames, const TensorD& fake_frames, int k = 50, double alpha = 0.05,
               std::uint64_t seed = 0);
/// Same with precomputed occupancy counts.
int ndb_from_counts(const std::vector<std::int64_t>& real, const std::vector<std::int64_t>& fake, double alpha);

/// Two-sided standard normal critical value, e.g. 1.959964 at alpha 0.05.
double normal_critical_value(double alpha);

struct RtfResult {
  double median = 0.0;
  std::vector<double> runs;  // RTF of every timed run
};

/// One untimed warm-up call, then `runs` timed calls; RTF = wall time / audio seconds.
RtfResult rtf(const std::function<void()>& synthesize, double audio_seconds, int runs = 5);
/// RTF of the N-step sampler on condition c.
RtfResult rtf(const diffusion::DenoiserFn& f, const dsp::MelCondition& c, int n_steps, int runs = 5);

}  // namespace linvoc::eval
