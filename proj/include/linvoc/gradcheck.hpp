// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Central-difference verification of reverse-mode gradients (64-bit).

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "linvoc/params.hpp"

namespace linvoc {

struct GradCheckOptions {
  double h = 1e-5;
  /// Probe at most this many entries per tensor (chosen by seeded shuffle);
  /// 0 probes every entry.
  std::int64_t max_probes_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::int64_t probes = 0;
  std::string worst;  // "<tensor>[<index>]" of the largest error
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-4). The floor keeps
/// round-off on gradients that are exactly zero from reading as large errors.
double grad_rel_error(double analytic, double numeric);

using InputFn = std::function<ad::Var<double>(ad::Graph<double>&, const std::vector<ad::Var<double>>&)>;
using ParamFn = std::function<ad::Var<double>(ad::Graph<double>&, ParamBinder<double>&)>;

/// Checks d f / d inputs. f must return a scalar. Throws std::runtime_error
/// if f is non-finite at a probe point.
GradCheckReport grad_check(const InputFn& f, std::vector<TensorD> inputs, const GradCheckOptions& opts = {});

/// Checks d f / d every tensor of `params`. Values are restored on return.
GradCheckReport grad_check_params(ParamSet<double>& params, const ParamFn& f, const GradCheckOptions& opts = {});

}  // namespace linvoc
