// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linvoc/rng.hpp"

namespace linvoc::diffusion {
namespace {

template <typename A, typename B>
void require_same_shape(const Tensor<A>& a, const Tensor<B>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

}  // namespace

void TrainSchedule::validate() const {
  if (t_train_max < 1) throw std::invalid_argument("t_train_max must be >= 1");
}

template <typename T>
Tensor<T> interpolate(const Tensor<T>& x_data, const Tensor<T>& x_noise, double s) {
  require_same_shape(x_data, x_noise, "interpolate");
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("interpolate: fraction outside [0, 1]");
  Tensor<T> out(x_data.shape());
  const T a = static_cast<T>(1.0 - s), b = static_cast<T>(s);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a * x_noise[i] + b * x_data[i];
  return out;
}

template <typename T>
Tensor<T> velocity(const Tensor<T>& x_hat_data, const Tensor<T>& x_noise) {
  require_same_shape(x_hat_data, x_noise, "velocity");
  Tensor<T> out(x_hat_data.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = x_hat_data[i] - x_noise[i];
  return out;
}

template TensorF interpolate(const TensorF&, const TensorF&, double);
template TensorD interpolate(const TensorD&, const TensorD&, double);
template TensorF velocity(const TensorF&, const TensorF&);
template TensorD velocity(const TensorD&, const TensorD&);

DiffusionState euler_step(DiffusionState state, const TensorD& x_hat_data) {
  if (state.n_steps < 1) throw std::invalid_argument("euler_step: n_steps must be >= 1");
  if (state.t >= state.n_steps) throw std::invalid_argument("euler_step: chain already at its final step");
  if (state.t < 0) throw std::invalid_argument("euler_step: negative step index");
  require_same_shape(state.x_t, state.x_noise, "euler_step");
  require_same_shape(state.x_t, x_hat_data, "euler_step");
  const double inv_n = 1.0 / state.n_steps;
  for (std::int64_t i = 0; i < state.x_t.size(); ++i) {
    state.x_t[i] += (x_hat_data[i] - state.x_noise[i]) * inv_n;
  }
  ++state.t;
  return state;
}

int step_embed_index(int t, int n_steps, const TrainSchedule& schedule) {
  schedule.validate();
  if (n_steps < 1 || t < 0 || t >= n_steps) throw std::invalid_argument("step_embed_index: need 0 <= t < N");
  return static_cast<int>(std::lround(static_cast<double>(t) / n_steps * schedule.t_train_max));
}

TrainingPair make_training_pair_at(const TensorF& x_data, int t, std::uint64_t seed, const TrainSchedule& schedule) {
  schedule.validate();
  if (t < 0 || t >= schedule.t_train_max) throw std::invalid_argument("training step outside [0, T_train)");
  Rng rng(seed);
  TrainingPair pair;
  pair.t = t;
  pair.x_noise = TensorF(x_data.shape(), gaussian_vector<float>(static_cast<std::size_t>(x_data.size()), rng));
  pair.x_t = interpolate(x_data, pair.x_noise, static_cast<double>(t) / schedule.t_train_max);
  return pair;
}

TrainingPair make_training_pair(const TensorF& x_data, std::uint64_t seed, const TrainSchedule& schedule) {
  schedule.validate();
  Rng rng(derive_seed(seed, "training-step"));
  std::uniform_int_distribution<int> pick(0, schedule.t_train_max - 1);
  const int t = pick(rng);
  return make_training_pair_at(x_data, t, derive_seed(seed, "training-noise"), schedule);
}

dsp::Waveform sample(const DenoiserFn& f, const dsp::MelCondition& c, int n_steps, std::uint64_t seed,
                     const TrainSchedule& schedule) {
  if (n_steps < 1) throw std::invalid_argument("sample: n_steps must be >= 1");
  if (c.num_frames() < 1 || c.frames.dim(1) != dsp::kMelBands) {
    throw std::invalid_argument("sample: condition must be [frames >= 1, 80]");
  }
  const std::int64_t len = c.num_samples();
  Rng rng(seed);
  DiffusionState state;
  state.n_steps = n_steps;
  state.x_noise = TensorD(Shape{len}, gaussian_vector<double>(static_cast<std::size_t>(len), rng));
  state.x_t = state.x_noise;
  while (state.t < n_steps) {
    const TensorF x_hat = f(state.x_t.cast<float>(), c, step_embed_index(state.t, n_steps, schedule));
    if (x_hat.shape() != state.x_t.shape()) {
      throw std::invalid_argument("sample: denoiser returned shape " + shape_str(x_hat.shape()));
    }
    state = euler_step(std::move(state), x_hat.cast<double>());
  }
  dsp::Waveform w;
  w.samples.resize(static_cast<std::size_t>(len));
  for (std::int64_t i = 0; i < len; ++i) {
    w.samples[static_cast<std::size_t>(i)] = static_cast<float>(std::clamp(state.x_t[i], -1.0, 1.0));
  }
  return w;
}

}  // namespace linvoc::diffusion
