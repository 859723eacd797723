// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Glue shared by the command-line tool and the acceptance run: one flat
// configuration for every module, dataset directories and batch evaluation.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "linvoc/kv.hpp"
#include "linvoc/trainer.hpp"

namespace linvoc::experiment {

struct ExperimentConfig {
  ait::DenoiserConfig denoiser;
  train::TrainConfig train;
  critics::CriticConfig critics;
  train::SynthDatasetSpec data;

  void validate() const;
};

KeyValues to_kv(const ExperimentConfig& c);
/// Unknown keys are rejected so typos do not pass silently.
ExperimentConfig experiment_from_kv(const KeyValues& kv, const ExperimentConfig& base = {});

/// Reads `path` (if non-empty), then applies "key=value" overrides in order.
ExperimentConfig resolve_config(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                                const ExperimentConfig& base = {});

struct ManifestEntry {
  std::string wav;
  std::string mel;
  double f0 = 0.0;
  std::int64_t samples = 0;
};

/// Writes clip_NNN.wav, clip_NNN.mel and manifest.json into `dir`.
std::vector<ManifestEntry> write_synth_data(const train::SynthDatasetSpec& spec, const std::filesystem::path& dir);

/// Clips listed in dir/manifest.json, or every *.wav in name order.
train::Dataset load_dataset_dir(const std::filesystem::path& dir);

/// Sorted *.wav file names in `dir`.
std::vector<std::string> wav_names(const std::filesystem::path& dir);

struct ClipScores {
  std::string clip;
  double mcd = 0.0;
  double vuv = 0.0;
  /// NaN when fewer than two frames are voiced in both.
  double f0corr = 0.0;
};

struct EvalReport {
  std::vector<ClipScores> clips;
  double mean_mcd = 0.0;
  double mean_vuv = 0.0;
  double mean_f0corr = 0.0;
  int ndb = 0;
  double jsd = 0.0;
  int bins = 0;
};

/// Pairs WAVs by file name. NDB/JSD bins the real log-mel frames with
/// k = min(k, frames) clusters.
EvalReport evaluate_dirs(const std::filesystem::path& real, const std::filesystem::path& fake, int k = 50,
                         std::uint64_t seed = 0);
void write_eval_csv(const EvalReport& r, const std::filesystem::path& path);

}  // namespace linvoc::experiment
