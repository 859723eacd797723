// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace linvoc {

/// Mirror index into [0, n) without repeating the edge sample (numpy "reflect").
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  std::int64_t m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

inline std::int64_t num_frames(std::int64_t length, int hop) { return (length + hop - 1) / hop; }

/// Flat source indices of centred, reflect-padded frames: frame f covers
/// samples f*hop - n_fft/2 ... f*hop + n_fft/2 - 1.
inline std::vector<std::int64_t> frame_indices(std::int64_t length, int n_fft, int hop) {
  if (length <= 0) throw std::invalid_argument("cannot frame an empty signal");
  if (hop < 1) throw std::invalid_argument("hop length must be >= 1");
  if (n_fft < 1) throw std::invalid_argument("n_fft must be >= 1");
  const std::int64_t frames = num_frames(length, hop);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(frames * n_fft));
  for (std::int64_t f = 0; f < frames; ++f) {
    for (int n = 0; n < n_fft; ++n) {
      idx[static_cast<std::size_t>(f * n_fft + n)] = reflect_index(f * hop - n_fft / 2 + n, length);
    }
  }
  return idx;
}

}  // namespace linvoc
