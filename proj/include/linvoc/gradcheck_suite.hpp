// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference sweep over every op, model block, critic and loss at
// 64-bit precision and tiny sizes.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace linvoc {

struct SuiteOptions {
  double tolerance = 1e-4;
  /// Hidden width of the model blocks; at most 16.
  int hidden = 16;
  std::uint64_t seed = 0;
  /// Adds a row whose backward rule is deliberately wrong.
  bool inject_fault = false;
};

struct SuiteRow {
  std::string kind;  // op, block, critic, loss or fault
  std::string name;
  double max_rel_error = 0.0;
  std::int64_t probes = 0;
  std::string worst;
  bool passed = false;
};

/// Runs every check; `on_row` (if set) sees each row as it finishes.
std::vector<SuiteRow> run_gradcheck_suite(const SuiteOptions& opts,
                                          const std::function<void(const SuiteRow&)>& on_row = {});

}  // namespace linvoc
