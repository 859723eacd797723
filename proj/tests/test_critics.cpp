// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "linvoc/critics.hpp"
#include "linvoc/objectives.hpp"
#include "test_util.hpp"

using namespace linvoc;
using namespace linvoc::critics;
using linvoc::testing::kGradTol;
using linvoc::testing::random_tensor;
using linvoc::testing::randomize_params;
using VarD = ad::Var<double>;

namespace {

CriticConfig small_config() {
  CriticConfig c;
  c.spectral_cfg = {64, 64, 16};
  c.widths = {3, 3, 4, 4};
  return c;
}

/// Sum of all scores with fixed weights so each score contributes.
VarD score_mix(const CriticScores<double>& s) {
  VarD total = ad::scale(s.scores[0], 1.0);
  for (std::size_t i = 1; i < s.size(); ++i) total = ad::add(total, ad::scale(s.scores[i], 1.0 + 0.37 * static_cast<double>(i)));
  return total;
}

}  // namespace

TEST_CASE("period view folds a waveform by period") {
  ad::Graph<double> g;
  auto x = g.constant(TensorD(Shape{4}, {1.0, 2.0, 3.0, 4.0}));
  auto v = period_view(x, 2);
  CHECK(v.shape() == Shape{2, 2});
  CHECK(v.value() == TensorD(Shape{2, 2}, {1.0, 3.0, 2.0, 4.0}));

  auto y = g.constant(TensorD(Shape{5}, {1.0, 2.0, 3.0, 4.0, 5.0}));
  auto w = period_view(y, 2);
  CHECK(w.shape() == Shape{2, 3});
  CHECK(w.value() == TensorD(Shape{2, 3}, {1.0, 3.0, 5.0, 2.0, 4.0, 0.0}));
  CHECK_THROWS_AS(period_view(y, 0), std::invalid_argument);
}

TEST_CASE("ensemble produces one finite score per view") {
  CriticEnsemble<double> ens(CriticConfig{}, 1);
  ad::Graph<double> g;
  ParamBinder<double> bind(g, std::as_const(ens.params()));
  auto s = ens(bind, g.constant(random_tensor({2048}, 2)));
  CHECK(s.size() == 5);
  CHECK(static_cast<int>(s.size()) == ens.config().num_scores());
  CHECK(s.names == std::vector<std::string>{"spectral", "msd1", "msd2", "mpd2", "mpd3"});
  for (double v : s.values()) CHECK(std::isfinite(v));
  for (const auto& v : s.scores) CHECK(v.shape().empty());
  CHECK(ens.calls() == 1);
}

TEST_CASE("critic input validation") {
  CriticEnsemble<double> ens(CriticConfig{}, 3);
  ad::Graph<double> g;
  ParamBinder<double> bind(g, std::as_const(ens.params()));
  CHECK_THROWS_AS(ens(bind, g.constant(TensorD(Shape{256}))), std::invalid_argument);
  CHECK_THROWS_AS(ens(bind, g.constant(TensorD(Shape{2049}))), std::invalid_argument);

  CriticConfig bad;
  bad.widths = {16, 32};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = CriticConfig{};
  bad.mpd_periods = {1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("critic initialisation is seeded") {
  CriticEnsemble<float> a(CriticConfig{}, 7), b(CriticConfig{}, 7), c(CriticConfig{}, 8);
  CHECK(a.params().at("spectral.conv0.w").value == b.params().at("spectral.conv0.w").value);
  CHECK_FALSE(a.params().at("spectral.conv0.w").value == c.params().at("spectral.conv0.w").value);
}

TEST_CASE("gradcheck: spectral critic") {
  const auto cfg = small_config();
  CriticEnsemble<double> ens(cfg, 4);
  randomize_params(ens.params(), 5, 0.4);
  const auto w = random_tensor({256}, 6);
  GradCheckOptions opts;
  opts.max_probes_per_tensor = 10;
  opts.h = 1e-6;
  auto rep = grad_check_params(
      ens.params(), [&](ad::Graph<double>& g, ParamBinder<double>& bind) { return spectral_critic(bind, g.constant(w), cfg); },
      opts);
  INFO("worst " << rep.worst << " a=" << rep.worst_analytic << " n=" << rep.worst_numeric);
  CHECK(rep.max_rel_error < kGradTol);
  auto rep_in = grad_check(
      [&](ad::Graph<double>& g, const std::vector<VarD>& v) {
        ParamBinder<double> bind(g, std::as_const(ens.params()));
        return spectral_critic(bind, v[0], cfg);
      },
      {w}, opts);
  INFO("worst " << rep_in.worst << " a=" << rep_in.worst_analytic << " n=" << rep_in.worst_numeric);
  CHECK(rep_in.max_rel_error < kGradTol);
}

TEST_CASE("gradcheck: multi-scale and multi-period critics") {
  const auto cfg = small_config();
  CriticEnsemble<double> ens(cfg, 8);
  randomize_params(ens.params(), 9, 0.4);
  const auto w = random_tensor({256}, 10);
  GradCheckOptions opts;
  opts.max_probes_per_tensor = 10;
  opts.h = 1e-6;
  auto mix = [&](ParamBinder<double>& bind, const VarD& x) {
    auto m = msd_critic(bind, x, cfg);
    auto p = mpd_critic(bind, x, cfg);
    VarD total = ad::add(m[0], ad::scale(m[1], 1.3));
    total = ad::add(total, ad::scale(p[0], 0.7));
    return ad::add(total, ad::scale(p[1], 1.9));
  };
  auto rep = grad_check_params(
      ens.params(), [&](ad::Graph<double>& g, ParamBinder<double>& bind) { return mix(bind, g.constant(w)); }, opts);
  INFO("worst " << rep.worst << " a=" << rep.worst_analytic << " n=" << rep.worst_numeric);
  CHECK(rep.max_rel_error < kGradTol);
  auto rep_in = grad_check(
      [&](ad::Graph<double>& g, const std::vector<VarD>& v) {
        ParamBinder<double> bind(g, std::as_const(ens.params()));
        return mix(bind, v[0]);
      },
      {w}, opts);
  INFO("worst " << rep_in.worst << " a=" << rep_in.worst_analytic << " n=" << rep_in.worst_numeric);
  CHECK(rep_in.max_rel_error < kGradTol);
}

TEST_CASE("critic update on a detached fake leaves the generator gradient at zero") {
  const auto cfg = small_config();
  CriticEnsemble<double> ens(cfg, 11);
  ParamSet<double> gen;
  gen.add("gen.w", random_tensor({256}, 12));
  gen.zero_grad();
  ens.params().zero_grad();

  ad::Graph<double> g;
  ParamBinder<double> gbind(g, gen);
  ParamBinder<double> dbind(g, ens.params());
  auto fake = ad::mul(gbind("gen.w"), g.constant(random_tensor({256}, 13)));
  auto real = g.constant(random_tensor({256}, 14));
  auto loss = objectives::adv_loss_discriminator(ens(dbind, ad::detach(fake)).scores, ens(dbind, real).scores);
  g.backward(loss);

  for (double v : gen.at("gen.w").grad.values()) CHECK(v == 0.0);
  double critic_mag = 0.0;
  for (const auto& p : ens.params()) {
    for (double v : p.grad.values()) critic_mag = std::max(critic_mag, std::abs(v));
  }
  CHECK(critic_mag > 0.0);
}

TEST_CASE("every critic parameter is reachable") {
  const auto cfg = small_config();
  CriticEnsemble<double> ens(cfg, 15);
  randomize_params(ens.params(), 16, 0.4);
  ens.params().zero_grad();
  ad::Graph<double> g;
  ParamBinder<double> bind(g, ens.params());
  g.backward(score_mix(ens(bind, g.constant(random_tensor({256}, 17)))));
  for (const auto& p : ens.params()) {
    double m = 0.0;
    for (double v : p.grad.values()) m = std::max(m, std::abs(v));
    CHECK_MESSAGE(m > 0.0, p.name);
  }
}
