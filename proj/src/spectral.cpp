// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "linvoc/dsp.hpp"
#include "linvoc/framing.hpp"

namespace linvoc::dsp {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

template <typename T>
std::shared_ptr<const DftBasis<T>> build_basis(const SpectrogramConfig& cfg) {
  const int n = cfg.n_fft;
  const int bins = cfg.bins();
  const auto win = padded_window(cfg);
  auto basis = std::make_shared<DftBasis<T>>();
  basis->re = Tensor<T>(Shape{n, bins});
  basis->im = Tensor<T>(Shape{n, bins});
  for (int t = 0; t < n; ++t) {
    basis->window_energy += win[static_cast<std::size_t>(t)] * win[static_cast<std::size_t>(t)];
    for (int k = 0; k < bins; ++k) {
      // exact phase reduction keeps large n_fft accurate
      const long long phase = (static_cast<long long>(t) * k) % n;
      const double ang = 2.0 * std::numbers::pi * static_cast<double>(phase) / n;
      basis->re[t * bins + k] = static_cast<T>(win[static_cast<std::size_t>(t)] * std::cos(ang));
      basis->im[t * bins + k] = static_cast<T>(-win[static_cast<std::size_t>(t)] * std::sin(ang));
    }
  }
  return basis;
}

}  // namespace

void SpectrogramConfig::validate() const {
  if (n_fft < 2) throw std::invalid_argument("n_fft must be >= 2");
  if (win_length < 1 || win_length > n_fft) throw std::invalid_argument("win_length must be in [1, n_fft]");
  if (hop_length < 1) throw std::invalid_argument("hop_length must be >= 1");
}

std::vector<double> padded_window(const SpectrogramConfig& cfg) {
  cfg.validate();
  std::vector<double> w(static_cast<std::size_t>(cfg.n_fft), 0.0);
  const int offset = (cfg.n_fft - cfg.win_length) / 2;
  for (int i = 0; i < cfg.win_length; ++i) {
    w[static_cast<std::size_t>(offset + i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / cfg.win_length);
  }
  return w;
}

template <typename T>
std::shared_ptr<const DftBasis<T>> dft_basis(const SpectrogramConfig& cfg) {
  static std::mutex mu;
  static std::map<std::tuple<int, int>, std::shared_ptr<const DftBasis<T>>> cache;
  cfg.validate();
  const auto key = std::make_tuple(cfg.n_fft, cfg.win_length);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto basis = build_basis<T>(cfg);
  cache.emplace(key, basis);
  return basis;
}

template std::shared_ptr<const DftBasis<float>> dft_basis<float>(const SpectrogramConfig&);
template std::shared_ptr<const DftBasis<double>> dft_basis<double>(const SpectrogramConfig&);

Spectrogram stft(const Waveform& w, const SpectrogramConfig& cfg) {
  cfg.validate();
  if (w.samples.empty()) throw std::invalid_argument("stft of an empty waveform");
  const auto idx = frame_indices(w.size(), cfg.n_fft, cfg.hop_length);
  const std::int64_t frames = num_frames(w.size(), cfg.hop_length);
  Mat<double> fr(frames, cfg.n_fft);
  for (std::int64_t i = 0; i < frames * cfg.n_fft; ++i) {
    fr.data()[i] = w.samples[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
  }
  const auto basis = dft_basis<double>(cfg);
  Eigen::Map<const Mat<double>> re(basis->re.data(), cfg.n_fft, cfg.bins());
  Eigen::Map<const Mat<double>> im(basis->im.data(), cfg.n_fft, cfg.bins());
  Mat<double> xr = fr * re;
  Mat<double> xi = fr * im;
  Spectrogram out;
  out.magnitude = TensorF(Shape{frames, cfg.bins()});
  for (std::int64_t i = 0; i < frames * cfg.bins(); ++i) {
    out.magnitude[i] = static_cast<float>(std::sqrt(xr.data()[i] * xr.data()[i] + xi.data()[i] * xi.data()[i]));
  }
  return out;
}

TensorD mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  if (n_mels < 1) throw std::invalid_argument("n_mels must be >= 1");
  if (n_fft < 2 || sample_rate <= 0) throw std::invalid_argument("invalid n_fft or sample rate");
  const int bins = n_fft / 2 + 1;
  if (n_mels > bins) {
    throw std::invalid_argument("n_mels (" + std::to_string(n_mels) + ") exceeds available bins (" +
                                std::to_string(bins) + ")");
  }
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_max * i / (n_mels + 1));
  TensorD fb(Shape{n_mels, bins});
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double ce = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double up = (f - lo) / (ce - lo);
      const double down = (hi - f) / (hi - ce);
      fb[m * bins + k] = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

MelCondition mel_condition(std::span<const float> samples, int sample_rate) {
  if (samples.empty() || samples.size() % kFrameHop != 0) {
    throw std::invalid_argument("waveform length " + std::to_string(samples.size()) + " is not a positive multiple of " +
                                std::to_string(kFrameHop));
  }
  const SpectrogramConfig cfg = mel_analysis_config();
  Waveform w{std::vector<float>(samples.begin(), samples.end()), sample_rate};
  const Spectrogram spec = stft(w, cfg);
  static const TensorD fb = mel_filterbank(kMelBands, cfg.n_fft, kSampleRate);
  const TensorD bank = sample_rate == kSampleRate ? fb : mel_filterbank(kMelBands, cfg.n_fft, sample_rate);
  const std::int64_t frames = spec.magnitude.dim(0);
  const int bins = cfg.bins();
  MelCondition c;
  c.config = cfg;
  c.frames = TensorF(Shape{frames, kMelBands});
  for (std::int64_t f = 0; f < frames; ++f) {
    const float* mag = spec.magnitude.data() + f * bins;
    for (int m = 0; m < kMelBands; ++m) {
      const double* row = bank.data() + m * bins;
      double acc = 0.0;
      for (int k = 0; k < bins; ++k) acc += row[k] * mag[k];
      c.frames[f * kMelBands + m] = static_cast<float>(std::log(acc + kLogMelFloor));
    }
  }
  return c;
}

MelCondition mel_condition(const Waveform& w) { return mel_condition(std::span<const float>(w.samples), w.sample_rate); }

MelCondition slice_frames(const MelCondition& c, std::int64_t begin, std::int64_t count) {
  if (begin < 0 || count < 0 || begin + count > c.num_frames()) throw std::out_of_range("mel frame slice out of range");
  const std::int64_t bands = c.frames.dim(1);
  std::vector<float> v(c.frames.data() + begin * bands, c.frames.data() + (begin + count) * bands);
  MelCondition out;
  out.config = c.config;
  out.frames = TensorF(Shape{count, bands}, std::move(v));
  return out;
}

}  // namespace linvoc::dsp
