// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "linvoc/eval.hpp"
#include "linvoc/rng.hpp"

using namespace linvoc;
using namespace linvoc::eval;

namespace {

std::vector<float> sine(double hz, std::int64_t n, double amp = 0.5) {
  std::vector<float> w(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / 22050.0));
  }
  return w;
}

F0Track track_from(const std::vector<double>& f0) {
  F0Track t;
  t.f0 = f0;
  for (double v : f0) t.voiced.push_back(v > 0.0);
  return t;
}

}  // namespace

TEST_CASE("f0 of a 220.5 Hz sine") {
  const auto w = sine(220.5, 22050);
  const auto track = extract_f0(w);
  REQUIRE(track.size() > 0);
  for (std::size_t i = 0; i < track.size(); ++i) {
    CHECK(track.voiced[i]);
    CHECK(track.f0[i] == doctest::Approx(220.5).epsilon(1.0 / 220.5));
  }
}

TEST_CASE("f0 tracks a harmonic tone at its fundamental") {
  std::vector<float> w(22050);
  for (std::size_t i = 0; i < w.size(); ++i) {
    double v = 0.0;
    for (int h = 1; h <= 6; ++h) v += std::sin(2.0 * std::numbers::pi * 130.0 * h * static_cast<double>(i) / 22050.0 + h) / h;
    w[i] = static_cast<float>(0.3 * v);
  }
  const auto track = extract_f0(w);
  for (std::size_t i = 0; i < track.size(); ++i) CHECK(track.f0[i] == doctest::Approx(130.0).epsilon(0.01));
}

TEST_CASE("white noise is mostly unvoiced") {
  Rng rng(1234);
  std::normal_distribution<float> n(0.0f, 0.3f);
  std::vector<float> w(22050);
  for (auto& v : w) v = n(rng);
  const auto track = extract_f0(w);
  std::size_t unvoiced = 0;
  for (std::size_t i = 0; i < track.size(); ++i) unvoiced += track.voiced[i] ? 0 : 1;
  CHECK(static_cast<double>(unvoiced) >= 0.9 * static_cast<double>(track.size()));
}

TEST_CASE("silence is unvoiced and short input is rejected") {
  const auto track = extract_f0(std::vector<float>(4096, 0.0f));
  for (std::size_t i = 0; i < track.size(); ++i) {
    CHECK_FALSE(track.voiced[i]);
    CHECK(track.f0[i] == 0.0);
  }
  CHECK_THROWS_AS(extract_f0(std::vector<float>(1000, 0.0f)), std::invalid_argument);
}

TEST_CASE("mel cepstra are an orthonormal DCT-II of the log-mel frame") {
  TensorF log_mel(Shape{2, 80});
  for (int i = 0; i < 160; ++i) log_mel[i] = static_cast<float>(std::sin(0.37 * i) * 3.0 - 4.0);
  const auto c = mel_cepstra(log_mel);
  REQUIRE(c.shape() == Shape{2, 13});
  for (int f = 0; f < 2; ++f) {
    for (int k = 1; k <= 13; ++k) {
      double acc = 0.0;
      for (int n = 0; n < 80; ++n) acc += log_mel[f * 80 + n] * std::cos(std::numbers::pi * (n + 0.5) * k / 80.0);
      CHECK(c[f * 13 + (k - 1)] == doctest::Approx(acc * std::sqrt(2.0 / 80.0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("mcd examples") {
  const auto a = sine(300.0, 8192);
  std::vector<float> b = sine(450.0, 8192, 0.2);
  CHECK(mcd(a, a) == 0.0);
  CHECK(mcd(a, b) > 0.0);
  CHECK(mcd(a, b) == mcd(b, a));
  CHECK_THROWS_AS(mcd(a, std::vector<float>(4096)), std::invalid_argument);

  TensorD ca(Shape{5, 13}), cb(Shape{5, 13});
  for (int i = 0; i < 65; ++i) ca[i] = cb[i] = 0.1 * i;
  for (int f = 0; f < 5; ++f) cb[f * 13 + 4] += 1.0;
  CHECK(mcd_from_cepstra(ca, cb) == doctest::Approx(10.0 / std::log(10.0) * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(mcd_from_cepstra(ca, cb) == doctest::Approx(6.1419).epsilon(1e-3 / 6.1419));
}

TEST_CASE("vuv error examples") {
  const auto a = track_from({100, 120, 0, 0});
  const auto b = track_from({100, 0, 0, 0});
  CHECK(vuv_error(a, b) == 0.25);
  CHECK(vuv_error(a, a) == 0.0);
  CHECK(vuv_error(a, track_from({0, 0, 110, 90})) == 1.0);
  CHECK_THROWS_AS(vuv_error(a, track_from({100})), std::invalid_argument);
}

TEST_CASE("f0 correlation examples") {
  const auto a = track_from({100, 110, 0, 130, 125});
  CHECK(f0_corr(a, a) == doctest::Approx(1.0));
  CHECK(f0_corr(a, track_from({200, 220, 0, 260, 250})) == doctest::Approx(1.0));
  CHECK(f0_corr(track_from({100, 110, 120, 130}), track_from({300, 290, 280, 270})) == doctest::Approx(-1.0));
  // affine rescaling of voiced values
  CHECK(f0_corr(a, track_from({53, 58, 0, 68, 65.5})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(f0_corr(a, track_from({0, 0, 0, 0, 120})), std::invalid_argument);
}

TEST_CASE("jsd and ndb building blocks") {
  CHECK(jsd_bits({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(jsd_bits({0.25, 0.75}, {0.25, 0.75}) == doctest::Approx(0.0));
  // direct evaluation: M = (0.5, 0.5)
  const double expect = 0.5 * (0.9 * std::log2(0.9 / 0.5) + 0.1 * std::log2(0.1 / 0.5)) +
                        0.5 * (0.1 * std::log2(0.1 / 0.5) + 0.9 * std::log2(0.9 / 0.5));
  CHECK(jsd_bits({0.9, 0.1}, {0.1, 0.9}) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(normal_critical_value(0.05) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(ndb_from_counts({50, 50}, {50, 50}, 0.05) == 0);
  // z = (0.9 - 0.1) / sqrt(0.5 * 0.5 * (2 / 100)) = 11.3 in both bins
  CHECK(ndb_from_counts({90, 10}, {10, 90}, 0.05) == 2);
}

TEST_CASE("ndb and jsd on a self comparison") {
  Rng rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  TensorD frames(Shape{600, 80});
  for (std::int64_t i = 0; i < 600; ++i) {
    for (int d = 0; d < 80; ++d) frames[i * 80 + d] = n(rng) + static_cast<double>(i % 6) * 3.0;
  }
  const auto self = ndb_jsd(frames, frames, 50);
  CHECK(self.ndb == 0);
  CHECK(self.jsd == doctest::Approx(0.0).epsilon(1e-9));

  const auto model = fit_bins(frames, 50, 0);
  double total = 0.0;
  for (double p : model.proportions) total += p;
  CHECK(total == doctest::Approx(1.0));
  CHECK(assign_bins(model, frames).size() == 600);
  CHECK_THROWS_AS(ndb_jsd(frames, frames, 601), std::invalid_argument);
}

TEST_CASE("ndb of two samples from one distribution stays near the false-positive budget") {
  Rng rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> comp(0, 9);
  auto draw = [&](std::int64_t count) {
    TensorD t(Shape{count, 80});
    for (std::int64_t i = 0; i < count; ++i) {
      const int c = comp(rng);
      for (int d = 0; d < 80; ++d) t[i * 80 + d] = n(rng) + (d % 10 == c ? 4.0 : 0.0);
    }
    return t;
  };
  const auto real = draw(2000);
  const auto fake = draw(2000);
  const auto r = ndb_jsd(real, fake, 50, 0.05, 3);
  CHECK(r.ndb <= static_cast<int>(std::ceil(0.05 * 50)) + 2);
  CHECK(r.jsd < 0.05);
}

TEST_CASE("rtf of a fixed-duration synthesis") {
  const auto r = rtf([] { std::this_thread::sleep_for(std::chrono::milliseconds(130)); }, 10.0, 3);
  CHECK(r.runs.size() == 3);
  CHECK(r.median == doctest::Approx(0.013).epsilon(0.15));
}
