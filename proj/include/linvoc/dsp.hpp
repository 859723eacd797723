// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Signal-processing primitives shared by conditioning, losses and metrics.

#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "linvoc/tensor.hpp"

namespace linvoc::dsp {

inline constexpr int kSampleRate = 22050;
inline constexpr int kMelBands = 80;
/// Samples per conditioning frame; waveform length = 256 x mel frames.
inline constexpr int kFrameHop = 256;
inline constexpr double kLogMelFloor = 1e-5;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }
  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct SpectrogramConfig {
  int n_fft = 1024;
  int win_length = 1024;
  int hop_length = 256;

  int bins() const { return n_fft / 2 + 1; }
  /// Throws std::invalid_argument on win_length > n_fft or hop_length < 1.
  void validate() const;
};

/// The conditioning analysis: 1024-point FFT, 1024-sample Hann window, hop 256.
inline SpectrogramConfig mel_analysis_config() { return SpectrogramConfig{1024, 1024, kFrameHop}; }

struct Spectrogram {
  TensorF magnitude;  // [frames, n_fft/2 + 1]
};

struct MelCondition {
  TensorF frames;  // [num_frames, 80] log-mel energies
  SpectrogramConfig config = mel_analysis_config();

  std::int64_t num_frames() const { return frames.rank() == 2 ? frames.dim(0) : 0; }
  std::int64_t num_samples() const { return num_frames() * kFrameHop; }
};

/// Periodic Hann window of win_length, centred in n_fft zeros.
std::vector<double> padded_window(const SpectrogramConfig& cfg);

/// Windowed real-DFT basis for one configuration: re/im are [n_fft, bins]
/// so that frames [F, n_fft] x re gives the real part of the spectrum.
template <typename T>
struct DftBasis {
  Tensor<T> re;
  Tensor<T> im;
  double window_energy = 0.0;  // sum of squared window samples
};

/// Cached per configuration; safe to call concurrently.
template <typename T>
std::shared_ptr<const DftBasis<T>> dft_basis(const SpectrogramConfig& cfg);

/// Magnitude STFT of centred, reflect-padded frames; ceil(len/hop) frames.
Spectrogram stft(const Waveform& w, const SpectrogramConfig& cfg);

/// [n_mels, n_fft/2+1] HTK-mel triangular filters spanning 0..sample_rate/2,
/// unnormalised.
TensorD mel_filterbank(int n_mels, int n_fft, int sample_rate);

/// log(mel_filterbank x |STFT| + 1e-5), one frame per 256 samples.
MelCondition mel_condition(const Waveform& w);
/// Same analysis over a raw sample buffer.
MelCondition mel_condition(std::span<const float> samples, int sample_rate = kSampleRate);

/// Frames [begin, begin+count) of a condition.
MelCondition slice_frames(const MelCondition& c, std::int64_t begin, std::int64_t count);

// RIFF/WAVE, PCM 16-bit mono.
Waveform wav_read(const std::filesystem::path& path);
void wav_write(const Waveform& w, const std::filesystem::path& path);

// Mel blob: text line "num_frames n_mels\n" then float32 little-endian values.
void write_mel_blob(const MelCondition& c, const std::filesystem::path& path);
MelCondition read_mel_blob(const std::filesystem::path& path);

}  // namespace linvoc::dsp
