// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace linvoc {
namespace {

std::vector<std::int64_t> probe_indices(std::int64_t n, const GradCheckOptions& opts, std::uint64_t salt) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  if (opts.max_probes_per_tensor > 0 && n > opts.max_probes_per_tensor) {
    std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ULL + salt);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(opts.max_probes_per_tensor));
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

double finite_or_throw(double v) {
  if (!std::isfinite(v)) throw std::runtime_error("gradient check: function is non-finite at a probe point");
  return v;
}

void record(GradCheckReport& rep, double analytic, double numeric, const std::string& where) {
  const double err = grad_rel_error(analytic, numeric);
  ++rep.probes;
  if (err > rep.max_rel_error || rep.worst.empty()) {
    rep.max_rel_error = err;
    rep.worst = where;
    rep.worst_analytic = analytic;
    rep.worst_numeric = numeric;
  }
}

}  // namespace

double grad_rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
}

GradCheckReport grad_check(const InputFn& f, std::vector<TensorD> inputs, const GradCheckOptions& opts) {
  std::vector<TensorD> analytic;
  {
    ad::Graph<double> g;
    std::vector<ad::Var<double>> leaves;
    for (const auto& t : inputs) leaves.push_back(g.leaf(t));
    auto out = f(g, leaves);
    finite_or_throw(out.value().item());
    g.backward(out);
    for (const auto& l : leaves) analytic.push_back(g.grad(l));
  }
  auto eval = [&]() {
    ad::Graph<double> g;
    std::vector<ad::Var<double>> leaves;
    for (const auto& t : inputs) leaves.push_back(g.constant(t));
    return finite_or_throw(f(g, leaves).value().item());
  };
  GradCheckReport rep;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (auto i : probe_indices(inputs[k].size(), opts, k)) {
      const double x0 = inputs[k][i];
      inputs[k][i] = x0 + opts.h;
      const double fp = eval();
      inputs[k][i] = x0 - opts.h;
      const double fm = eval();
      inputs[k][i] = x0;
      record(rep, analytic[k][i], (fp - fm) / (2.0 * opts.h),
             "input" + std::to_string(k) + "[" + std::to_string(i) + "]");
    }
  }
  return rep;
}

GradCheckReport grad_check_params(ParamSet<double>& params, const ParamFn& f, const GradCheckOptions& opts) {
  params.zero_grad();
  {
    ad::Graph<double> g;
    ParamBinder<double> bind(g, params);
    auto out = f(g, bind);
    finite_or_throw(out.value().item());
    g.backward(out);
  }
  auto eval = [&]() {
    ad::Graph<double> g;
    const ParamSet<double>& frozen = params;
    ParamBinder<double> bind(g, frozen);
    return finite_or_throw(f(g, bind).value().item());
  };
  GradCheckReport rep;
  std::uint64_t salt = 0;
  for (auto& p : params) {
    for (auto i : probe_indices(p.value.size(), opts, salt++)) {
      const double x0 = p.value[i];
      p.value[i] = x0 + opts.h;
      const double fp = eval();
      p.value[i] = x0 - opts.h;
      const double fm = eval();
      p.value[i] = x0;
      record(rep, p.grad[i], (fp - fm) / (2.0 * opts.h), p.name + "[" + std::to_string(i) + "]");
    }
  }
  return rep;
}

}  // namespace linvoc
