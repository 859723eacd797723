// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "linvoc/diffusion.hpp"
#include "linvoc/rng.hpp"

using namespace linvoc;
using namespace linvoc::diffusion;

namespace {

TensorD scalar1(double v) { return TensorD(Shape{1}, std::vector<double>{v}); }

dsp::MelCondition blank_condition(int frames) {
  dsp::MelCondition c;
  c.frames = TensorF(Shape{frames, dsp::kMelBands});
  return c;
}

TensorF smooth_signal(std::int64_t n) {
  TensorF x(Shape{n});
  for (std::int64_t i = 0; i < n; ++i) x[i] = static_cast<float>(0.8 * std::sin(0.01 * i) * std::cos(0.0007 * i));
  return x;
}

}  // namespace

TEST_CASE("interpolation endpoints and a direct value") {
  const auto d = scalar1(-1.0), n = scalar1(2.0);
  CHECK(interpolate(d, n, 0.0)[0] == 2.0);
  CHECK(interpolate(d, n, 1.0)[0] == -1.0);
  CHECK(interpolate(d, n, 0.25)[0] == doctest::Approx(1.25));
  CHECK_THROWS_AS(interpolate(d, n, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(interpolate(d, TensorD(Shape{2}), 0.5), std::invalid_argument);
}

TEST_CASE("velocity") {
  CHECK(velocity(scalar1(-1.0), scalar1(2.0))[0] == -3.0);
  CHECK(velocity(scalar1(0.3), scalar1(0.3))[0] == 0.0);
  // perfect predictor: the chord slope is the same from every point of the line
  const auto d = scalar1(-0.4), n = scalar1(1.3);
  for (double s : {0.0, 0.3, 0.9}) {
    const auto xt = interpolate(d, n, s);
    CHECK((d[0] - xt[0]) / (1.0 - s) == doctest::Approx(velocity(d, n)[0]));
  }
}

TEST_CASE("euler step values") {
  DiffusionState st{scalar1(1.25), 0, scalar1(2.0), 4};
  CHECK(euler_step(st, scalar1(-1.0)).x_t[0] == doctest::Approx(0.5));

  DiffusionState one{scalar1(2.0), 0, scalar1(2.0), 1};
  CHECK(euler_step(one, scalar1(-0.7)).x_t[0] == doctest::Approx(-0.7));

  DiffusionState s3{scalar1(0.9), 0, scalar1(0.9), 3};
  for (int i = 0; i < 3; ++i) s3 = euler_step(s3, scalar1(-0.2));
  CHECK(s3.x_t[0] == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(s3.t == 3);
  CHECK_THROWS_AS(euler_step(s3, scalar1(0.0)), std::invalid_argument);
}

TEST_CASE("sampler with an oracle denoiser reproduces the data") {
  const int frames = 4;
  const auto x_data = smooth_signal(frames * 256);
  DenoiserFn oracle = [&](const TensorF&, const dsp::MelCondition&, int) { return x_data; };
  for (int n : {1, 3, 100}) {
    const auto w = sample(oracle, blank_condition(frames), n, 11);
    REQUIRE(w.samples.size() == static_cast<std::size_t>(x_data.size()));
    double worst = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      const double ref = x_data[static_cast<std::int64_t>(i)];
      worst = std::max(worst, std::abs(w.samples[i] - ref) / std::max(std::abs(ref), 1e-3));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("sampler is deterministic and passes calibrated step indices") {
  std::vector<int> seen;
  DenoiserFn f = [&](const TensorF& x, const dsp::MelCondition&, int t) {
    seen.push_back(t);
    TensorF y = x;
    for (auto& v : y.values()) v *= 0.5f;
    return y;
  };
  const auto a = sample(f, blank_condition(2), 3, 5);
  CHECK(seen == std::vector<int>{0, 333, 667});
  const auto b = sample(f, blank_condition(2), 3, 5);
  CHECK(a.samples == b.samples);
  const auto c = sample(f, blank_condition(2), 3, 6);
  CHECK(a.samples != c.samples);
}

TEST_CASE("step embedding index") {
  const TrainSchedule s{};
  CHECK(step_embed_index(1, 3, s) == 333);
  CHECK(step_embed_index(0, 7, s) == 0);
  for (int t = 0; t < 1000; t += 37) CHECK(step_embed_index(t, 1000, s) == t);
}

TEST_CASE("training pairs") {
  const auto x = smooth_signal(512);
  const TrainSchedule s{};
  const auto p0 = make_training_pair_at(x, 0, 3, s);
  CHECK(p0.x_t == p0.x_noise);
  CHECK_THROWS_AS(make_training_pair_at(x, 1000, 3, s), std::invalid_argument);

  // uniformity of t over 10^5 draws, 10 equal bins, each within 5 sigma
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  const auto tiny = smooth_signal(1);
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(make_training_pair(tiny, derive_seed(1, "t", i), s).t / 100)];
  const double p = 0.1, mean = draws * p, sigma = std::sqrt(draws * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - mean) < 5 * sigma);

  // E[x_t] = s * x_data for fixed t
  const int t = 600;
  const int n = 4000;
  const auto xd = smooth_signal(8);
  std::vector<double> acc(8, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto pr = make_training_pair_at(xd, t, derive_seed(2, "mc", i), s);
    for (int j = 0; j < 8; ++j) acc[static_cast<std::size_t>(j)] += pr.x_t[j];
  }
  const double sd = (1.0 - 0.6) / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < 8; ++j) CHECK(std::abs(acc[static_cast<std::size_t>(j)] / n - 0.6 * xd[j]) < 3.5 * sd);
}
