// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Straight-line diffusion between a Gaussian draw and the clean waveform.
//
// Reverse-time index t runs 0..N with fraction s = t/N and state
//   x_t = (1 - s) * x_noise + s * x_data.
// The denoiser predicts x_data directly; the update direction is
// prediction - x_noise, integrated with N uniform Euler steps.

#pragma once

#include <cstdint>
#include <functional>

#include "linvoc/dsp.hpp"
#include "linvoc/tensor.hpp"

namespace linvoc::diffusion {

struct TrainSchedule {
  int t_train_max = 1000;
  void validate() const;
};

/// (1 - s) * x_noise + s * x_data, s in [0, 1].
template <typename T>
Tensor<T> interpolate(const Tensor<T>& x_data, const Tensor<T>& x_noise, double s);

/// x_hat_data - x_noise.
template <typename T>
Tensor<T> velocity(const Tensor<T>& x_hat_data, const Tensor<T>& x_noise);

/// Sampler state. Kept in double so long chains accumulate no float drift.
struct DiffusionState {
  TensorD x_t;
  int t = 0;
  TensorD x_noise;
  int n_steps = 1;
};

/// x_{t+1} = x_t + (x_hat_data - x_noise) / N; x_noise carried unchanged.
DiffusionState euler_step(DiffusionState state, const TensorD& x_hat_data);

/// Training-calibrated step index for inference step t of N: round(t/N * T_train).
int step_embed_index(int t, int n_steps, const TrainSchedule& schedule);

struct TrainingPair {
  TensorF x_t;
  int t = 0;
  TensorF x_noise;
};

/// Uniform integer t in [0, T_train), fresh Gaussian noise, x_t on the line.
TrainingPair make_training_pair(const TensorF& x_data, std::uint64_t seed, const TrainSchedule& schedule);
/// Same with t fixed by the caller.
TrainingPair make_training_pair_at(const TensorF& x_data, int t, std::uint64_t seed, const TrainSchedule& schedule);

/// f(x_t, condition, step index) -> prediction of the clean waveform.
using DenoiserFn = std::function<TensorF(const TensorF&, const dsp::MelCondition&, int)>;

/// N-step Euler sampler. Draws x_noise of 256 x frames samples from `seed`,
/// never reads clean audio, returns the final state clipped to [-1, 1].
dsp::Waveform sample(const DenoiserFn& f, const dsp::MelCondition& c, int n_steps, std::uint64_t seed,
                     const TrainSchedule& schedule = {});

}  // namespace linvoc::diffusion
