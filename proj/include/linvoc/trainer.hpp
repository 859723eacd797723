// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Three-stage training loop, Adam, checkpoints and the synthetic corpus.
//
//   stage 1  [0, stage1_end)           generator on l_diff + l_s
//   stage 2  [stage1_end, stage2_end)  critic every step, then generator
//   stage 3  [stage2_end, total_steps) critic when step % 5 == 0, long clips

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "linvoc/ait.hpp"
#include "linvoc/checkpoint.hpp"
#include "linvoc/critics.hpp"
#include "linvoc/diffusion.hpp"
#include "linvoc/kv.hpp"
#include "linvoc/objectives.hpp"

namespace linvoc::train {

struct TrainConfig {
  std::int64_t stage1_end = 10000;
  std::int64_t stage2_end = 20000;
  std::int64_t total_steps = 30000;
  int batch_size = 4;
  /// Crop lengths in samples; 0 means the whole clip.
  std::int64_t clip_samples_short = 22016;
  std::int64_t clip_samples_long = 0;
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  int d_update_period_stage3 = 5;
  std::int64_t checkpoint_every = 1000;
  std::uint64_t seed = 0;
  diffusion::TrainSchedule schedule{};

  void validate() const;
};

/// 1, 2 or 3 for a 0-based step.
int stage_for_step(std::int64_t step, const TrainConfig& cfg);
bool critic_updates_at(std::int64_t step, const TrainConfig& cfg);

enum class Envelope { kFlat, kSmooth, kAttackDecay };
std::string to_string(Envelope e);
Envelope envelope_from_string(const std::string& s);

struct SynthDatasetSpec {
  int n_clips = 4;
  std::int64_t clip_samples = 22016;
  double f0_min = 80.0;
  double f0_max = 400.0;
  /// 0 fills every harmonic below Nyquist.
  int n_harmonics = 8;
  /// Harmonic h has amplitude h^-gamma * u_h, gamma per clip in this range, u_h in [0.5, 1].
  double decay_min = 0.5;
  double decay_max = 2.0;
  Envelope envelope = Envelope::kSmooth;
  double noise_burst_prob = 0.0;
  /// Standard deviation of stationary white noise mixed in before normalisation.
  double noise_floor = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Clip {
  TensorF audio;           // [L], L multiple of 256
  dsp::MelCondition mel;   // [L/256, 80]
  double f0 = 0.0;         // 0 when unknown
};

struct Dataset {
  std::vector<Clip> clips;
};

Dataset synth_dataset(const SynthDatasetSpec& spec);
/// Wraps loaded audio; lengths are truncated to a multiple of 256.
Dataset dataset_from_waveforms(const std::vector<dsp::Waveform>& waves);

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

struct AdamState {
  std::int64_t t = 0;
  std::map<std::string, TensorF> m;
  std::map<std::string, TensorF> v;
};

/// Bias-corrected Adam on every parameter from its .grad. Throws
/// NonFiniteError (leaving params and state untouched) on a non-finite grad.
void adam_step(ParamSet<float>& params, AdamState& state, const AdamOptions& opt);

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double grad_norm(const ParamSet<float>& params);

class Trainer {
 public:
  Trainer(TrainConfig cfg, ait::DenoiserConfig dcfg, critics::CriticConfig ccfg, Dataset data);

  /// Runs step `step()` and advances. Throws NonFiniteError without updating
  /// anything when a loss or gradient is not finite.
  objectives::LossReport train_step();

  std::int64_t step() const { return step_; }
  std::int64_t critic_updates() const { return critic_updates_; }
  const TrainConfig& config() const { return cfg_; }
  const Dataset& data() const { return data_; }
  ait::Denoiser<float>& denoiser() { return denoiser_; }
  const ait::Denoiser<float>& denoiser() const { return denoiser_; }
  critics::CriticEnsemble<float>& critics() { return critics_; }
  const critics::CriticEnsemble<float>& critics() const { return critics_; }

  /// Model, critic, optimiser moments, counters and configs.
  Checkpoint checkpoint() const;
  /// Restores a checkpoint written by checkpoint(); configs must match.
  void restore(const Checkpoint& ckpt);

  /// Clip index and crop start used by batch slot `slot` of `step`.
  std::pair<std::size_t, std::int64_t> batch_item(std::int64_t step, int slot) const;

 private:
  TrainConfig cfg_;
  Dataset data_;
  ait::Denoiser<float> denoiser_;
  critics::CriticEnsemble<float> critics_;
  AdamState adam_g_;
  AdamState adam_d_;
  std::int64_t step_ = 0;
  std::int64_t critic_updates_ = 0;
};

/// Denoiser-only checkpoint contents for sampling.
ait::Denoiser<float> load_denoiser(const Checkpoint& ckpt);

struct RunOptions {
  std::filesystem::path out_dir;
  /// Resume from this checkpoint manifest when non-empty.
  std::filesystem::path resume;
  /// Called after every step (for progress output).
  std::function<void(const objectives::LossReport&)> on_step;
};

/// Trains to cfg.total_steps, appending to <out_dir>/train_log.csv and writing
/// <out_dir>/ckpt_<step>.json every checkpoint_every steps plus final.json.
/// Returns the final manifest path.
std::filesystem::path run_training(Trainer& trainer, const RunOptions& opts);

KeyValues to_kv(const TrainConfig& c);
TrainConfig train_config_from_kv(const KeyValues& kv, const TrainConfig& base = {});
KeyValues to_kv(const SynthDatasetSpec& s);
SynthDatasetSpec synth_spec_from_kv(const KeyValues& kv, const SynthDatasetSpec& base = {});
KeyValues to_kv(const critics::CriticConfig& c);
critics::CriticConfig critic_config_from_kv(const KeyValues& kv, const critics::CriticConfig& base = {});

}  // namespace linvoc::train
