// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "linvoc/rng.hpp"

namespace linvoc::eval {
namespace {

constexpr int kCepstra = 13;

double sq_dist(const double* a, const double* b, std::int64_t d) {
  double s = 0.0;
  for (std::int64_t i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

void check_tracks(const F0Track& a, const F0Track& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("F0 tracks differ in length: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

}  // namespace

F0Track extract_f0(std::span<const float> w, const F0Options& o) {
  const auto len = static_cast<std::int64_t>(w.size());
  const int win = o.frame_length;
  if (len < win) {
    throw std::invalid_argument("F0 extraction needs at least " + std::to_string(win) + " samples, got " +
                                std::to_string(len));
  }
  const int lag_min = std::max(2, static_cast<int>(std::floor(o.sample_rate / o.f0_max)));
  const int lag_max = std::min(win - 2, static_cast<int>(std::ceil(o.sample_rate / o.f0_min)));
  const std::int64_t frames = (len + o.hop - 1) / o.hop;

  F0Track track;
  track.hop = o.hop;
  track.f0.assign(static_cast<std::size_t>(frames), 0.0);
  track.voiced.assign(static_cast<std::size_t>(frames), false);
  std::vector<double> x(static_cast<std::size_t>(win));
  std::vector<double> r(static_cast<std::size_t>(lag_max + 2), 0.0);
  for (std::int64_t f = 0; f < frames; ++f) {
    const std::int64_t start = std::clamp<std::int64_t>(f * o.hop - win / 2, 0, len - win);
    double mean = 0.0;
    for (int i = 0; i < win; ++i) mean += w[static_cast<std::size_t>(start + i)];
    mean /= win;
    for (int i = 0; i < win; ++i) x[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(start + i)] - mean;

    // Normalised autocorrelation r(tau) over lag_min-1 .. lag_max+1.
    double best = -1.0;
    for (int tau = lag_min - 1; tau <= lag_max + 1; ++tau) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      for (int n = 0; n + tau < win; ++n) {
        const double a = x[static_cast<std::size_t>(n)];
        const double b = x[static_cast<std::size_t>(n + tau)];
        num += a * b;
        e0 += a * a;
        e1 += b * b;
      }
      const double den = std::sqrt(e0 * e1);
      const double v = den > 1e-12 ? num / den : 0.0;
      r[static_cast<std::size_t>(tau)] = v;
      if (tau >= lag_min && tau <= lag_max) best = std::max(best, v);
    }
    if (best < o.voicing_threshold) continue;

    // First interior local maximum close to the global one avoids octave-down picks.
    int pick = -1;
    for (int tau = lag_min; tau <= lag_max; ++tau) {
      const double v = r[static_cast<std::size_t>(tau)];
      if (v >= 0.85 * best && v >= r[static_cast<std::size_t>(tau - 1)] && v >= r[static_cast<std::size_t>(tau + 1)]) {
        pick = tau;
        break;
      }
    }
    if (pick < 0) continue;
    const double ym = r[static_cast<std::size_t>(pick - 1)];
    const double y0 = r[static_cast<std::size_t>(pick)];
    const double yp = r[static_cast<std::size_t>(pick + 1)];
    const double denom = ym - 2.0 * y0 + yp;
    const double shift = std::abs(denom) > 1e-12 ? std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5) : 0.0;
    const double f0 = o.sample_rate / (pick + shift);
    if (f0 < o.f0_min || f0 > o.f0_max) continue;
    track.f0[static_cast<std::size_t>(f)] = f0;
    track.voiced[static_cast<std::size_t>(f)] = true;
  }
  return track;
}

TensorD mel_cepstra(const TensorF& log_mel) {
  if (log_mel.rank() != 2) throw std::invalid_argument("mel_cepstra expects [frames, bands]");
  const auto frames = log_mel.dim(0);
  const auto bands = log_mel.dim(1);
  if (bands <= kCepstra) throw std::invalid_argument("mel_cepstra needs more than 13 bands");
  TensorD out(Shape{frames, kCepstra});
  const double scale = std::sqrt(2.0 / static_cast<double>(bands));
  for (std::int64_t f = 0; f < frames; ++f) {
    for (int k = 1; k <= kCepstra; ++k) {
      double s = 0.0;
      for (std::int64_t n = 0; n < bands; ++n) {
        s += log_mel[f * bands + n] * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * bands));
      }
      out[f * kCepstra + (k - 1)] = scale * s;
    }
  }
  return out;
}

double mcd_from_cepstra(const TensorD& a, const TensorD& b) {
  if (a.shape() != b.shape() || a.rank() != 2) {
    throw std::invalid_argument("MCD: cepstra shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const auto frames = a.dim(0);
  const auto dim = a.dim(1);
  if (frames == 0) throw std::invalid_argument("MCD: no frames");
  const double k = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (std::int64_t f = 0; f < frames; ++f) total += k * std::sqrt(2.0 * sq_dist(&a[f * dim], &b[f * dim], dim));
  return total / static_cast<double>(frames);
}

double mcd(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("MCD: length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const auto n = a.size() / dsp::kFrameHop * dsp::kFrameHop;
  if (n == 0) throw std::invalid_argument("MCD: signals shorter than 256 samples");
  const auto ca = mel_cepstra(dsp::mel_condition(a.first(n)).frames);
  const auto cb = mel_cepstra(dsp::mel_condition(b.first(n)).frames);
  return mcd_from_cepstra(ca, cb);
}

double vuv_error(const F0Track& a, const F0Track& b) {
  check_tracks(a, b);
  if (a.size() == 0) throw std::invalid_argument("V/UV error of empty tracks");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a.voiced[i] != b.voiced[i];
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

double f0_corr(const F0Track& a, const F0Track& b) {
  check_tracks(a, b);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.voiced[i] && b.voiced[i]) {
      x.push_back(a.f0[i]);
      y.push_back(b.f0[i]);
    }
  }
  if (x.size() < 2) throw std::invalid_argument("F0 correlation needs at least 2 jointly voiced frames");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw std::invalid_argument("F0 correlation undefined for a constant track");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

BinModel fit_bins(const TensorD& frames, int k, std::uint64_t seed, int iterations) {
  if (frames.rank() != 2 || frames.dim(0) == 0) throw std::invalid_argument("k-means needs a non-empty [n, dim] set");
  if (k < 2) throw std::invalid_argument("k-means needs k >= 2");
  const auto n = frames.dim(0);
  const auto d = frames.dim(1);
  if (k > n) {
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " real frames");
  }
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  Rng rng(derive_seed(seed, "kmeans-init"));
  std::shuffle(order.begin(), order.end(), rng);

  BinModel m;
  m.centroids = TensorD(Shape{k, d});
  for (int c = 0; c < k; ++c) {
    std::copy_n(&frames[order[static_cast<std::size_t>(c)] * d], d, &m.centroids[c * d]);
  }
  std::vector<int> assign;
  for (int it = 0; it < iterations; ++it) {
    assign = assign_bins(m, frames);
    TensorD sums(Shape{k, d});
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (std::int64_t i = 0; i < n; ++i) {
      const int c = assign[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(c)];
      for (std::int64_t j = 0; j < d; ++j) sums[c * d + j] += frames[i * d + j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      for (std::int64_t j = 0; j < d; ++j) {
        m.centroids[c * d + j] = sums[c * d + j] / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }
  assign = assign_bins(m, frames);
  m.proportions.assign(static_cast<std::size_t>(k), 0.0);
  for (int c : assign) m.proportions[static_cast<std::size_t>(c)] += 1.0 / static_cast<double>(n);
  return m;
}

std::vector<int> assign_bins(const BinModel& model, const TensorD& frames) {
  const auto k = model.centroids.dim(0);
  const auto d = model.centroids.dim(1);
  if (frames.rank() != 2 || frames.dim(1) != d) throw std::invalid_argument("bin assignment: dimension mismatch");
  std::vector<int> out(static_cast<std::size_t>(frames.dim(0)));
  for (std::int64_t i = 0; i < frames.dim(0); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::int64_t c = 0; c < k; ++c) {
      const double dist = sq_dist(&frames[i * d], &model.centroids[c * d], d);
      if (dist < best) {
        best = dist;
        arg = static_cast<int>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = arg;
  }
  return out;
}

double jsd_bits(const std::vector<double>& p, const std::vector<double>& q, double smoothing) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("JSD: histograms differ in size");
  auto normalise = [&](const std::vector<double>& h) {
    std::vector<double> out(h.size());
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) s += out[i] = h[i] + smoothing;
    for (auto& v : out) v /= s;
    return out;
  };
  const auto a = normalise(p);
  const auto b = normalise(q);
  double j = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double m = 0.5 * (a[i] + b[i]);
    if (a[i] > 0.0) j += 0.5 * a[i] * std::log2(a[i] / m);
    if (b[i] > 0.0) j += 0.5 * b[i] * std::log2(b[i] / m);
  }
  return std::clamp(j, 0.0, 1.0);
}

double normal_critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  // Solve erfc(z / sqrt 2) = alpha by bisection.
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::numbers::sqrt2) > alpha) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

int ndb_from_counts(const std::vector<std::int64_t>& real, const std::vector<std::int64_t>& fake, double alpha) {
  if (real.size() != fake.size()) throw std::invalid_argument("NDB: count vectors differ in size");
  const double nr = static_cast<double>(std::accumulate(real.begin(), real.end(), std::int64_t{0}));
  const double nf = static_cast<double>(std::accumulate(fake.begin(), fake.end(), std::int64_t{0}));
  if (nr == 0.0 || nf == 0.0) throw std::invalid_argument("NDB: both sets must be non-empty");
  const double z_crit = normal_critical_value(alpha);
  int ndb = 0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    const double pr = static_cast<double>(real[i]) / nr;
    const double pf = static_cast<double>(fake[i]) / nf;
    const double p = static_cast<double>(real[i] + fake[i]) / (nr + nf);
    const double se = std::sqrt(p * (1.0 - p) * (1.0 / nr + 1.0 / nf));
    if (se > 0.0 && std::abs(pr - pf) / se > z_crit) ++ndb;
  }
  return ndb;
}

NdbJsd ndb_jsd(const TensorD& real_frames, const TensorD& fake_frames, int k, double alpha, std::uint64_t seed) {
  if (fake_frames.rank() != 2 || fake_frames.dim(0) == 0) throw std::invalid_argument("NDB: empty fake set");
  const auto model = fit_bins(real_frames, k, seed);
  std::vector<std::int64_t> cr(static_cast<std::size_t>(k), 0), cf(static_cast<std::size_t>(k), 0);
  for (int c : assign_bins(model, real_frames)) ++cr[static_cast<std::size_t>(c)];
  for (int c : assign_bins(model, fake_frames)) ++cf[static_cast<std::size_t>(c)];
  std::vector<double> pr(cr.begin(), cr.end()), pf(cf.begin(), cf.end());
  for (auto& v : pr) v /= static_cast<double>(real_frames.dim(0));
  for (auto& v : pf) v /= static_cast<double>(fake_frames.dim(0));
  return {ndb_from_counts(cr, cf, alpha), jsd_bits(pr, pf)};
}

RtfResult rtf(const std::function<void()>& synthesize, double audio_seconds, int runs) {
  if (!(audio_seconds > 0.0)) throw std::invalid_argument("RTF needs a positive audio duration");
  if (runs < 1) throw std::invalid_argument("RTF needs at least one timed run");
  synthesize();
  RtfResult out;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    synthesize();
    const auto t1 = std::chrono::steady_clock::now();
    out.runs.push_back(std::chrono::duration<double>(t1 - t0).count() / audio_seconds);
  }
  auto sorted = out.runs;
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  out.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return out;
}

RtfResult rtf(const diffusion::DenoiserFn& f, const dsp::MelCondition& c, int n_steps, int runs) {
  const double seconds = static_cast<double>(c.num_samples()) / dsp::kSampleRate;
  return rtf([&] { diffusion::sample(f, c, n_steps, 0); }, seconds, runs);
}

}  // namespace linvoc::eval
