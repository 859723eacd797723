// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "linvoc/eval.hpp"

namespace linvoc::experiment {
namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  denoiser.validate();
  train.validate();
  critics.validate();
  data.validate();
}

KeyValues to_kv(const ExperimentConfig& c) {
  KeyValues kv = ait::to_kv(c.denoiser);
  for (const auto& part : {train::to_kv(c.train), train::to_kv(c.critics), train::to_kv(c.data)}) {
    for (const auto& [k, v] : part) {
      if (!kv.emplace(k, v).second) throw std::logic_error("duplicate configuration key " + k);
    }
  }
  return kv;
}

ExperimentConfig experiment_from_kv(const KeyValues& kv, const ExperimentConfig& base) {
  const auto known = to_kv(base);
  for (const auto& [k, v] : kv) {
    if (!known.count(k)) throw std::invalid_argument("unknown configuration key '" + k + "'");
  }
  ExperimentConfig c;
  c.denoiser = ait::denoiser_config_from_kv(kv, base.denoiser);
  c.train = train::train_config_from_kv(kv, base.train);
  c.critics = train::critic_config_from_kv(kv, base.critics);
  c.data = train::synth_spec_from_kv(kv, base.data);
  c.validate();
  return c;
}

ExperimentConfig resolve_config(const fs::path& path, const std::vector<std::string>& overrides,
                                const ExperimentConfig& base) {
  KeyValues kv;
  if (!path.empty()) kv = read_kv_file(path);
  for (const auto& o : overrides) apply_override(kv, o);
  return experiment_from_kv(kv, base);
}

std::vector<ManifestEntry> write_synth_data(const train::SynthDatasetSpec& spec, const fs::path& dir) {
  fs::create_directories(dir);
  const auto data = train::synth_dataset(spec);
  std::vector<ManifestEntry> entries;
  nlohmann::json clips = nlohmann::json::array();
  for (std::size_t i = 0; i < data.clips.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "clip_%03zu", i);
    ManifestEntry e;
    e.wav = std::string(stem) + ".wav";
    e.mel = std::string(stem) + ".mel";
    e.f0 = data.clips[i].f0;
    e.samples = data.clips[i].audio.size();
    dsp::Waveform w;
    w.samples.assign(data.clips[i].audio.values().begin(), data.clips[i].audio.values().end());
    dsp::wav_write(w, dir / e.wav);
    // condition from the stored (quantised) audio, as training will see it
    dsp::write_mel_blob(dsp::mel_condition(dsp::wav_read(dir / e.wav)), dir / e.mel);
    clips.push_back({{"wav", e.wav}, {"mel", e.mel}, {"f0", e.f0}, {"samples", e.samples}});
    entries.push_back(e);
  }
  nlohmann::json spec_json = nlohmann::json::object();
  for (const auto& [k, v] : train::to_kv(spec)) spec_json[k] = v;
  nlohmann::json manifest = {{"spec", spec_json}, {"clips", clips}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  return entries;
}

std::vector<std::string> wav_names(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

train::Dataset load_dataset_dir(const fs::path& dir) {
  std::vector<std::string> names;
  const auto manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    const auto j = nlohmann::json::parse(in);
    for (const auto& c : j.at("clips")) names.push_back(c.at("wav").get<std::string>());
  } else {
    names = wav_names(dir);
  }
  if (names.empty()) throw std::runtime_error("no WAV files in " + dir.string());
  std::vector<dsp::Waveform> waves;
  for (const auto& n : names) waves.push_back(dsp::wav_read(dir / n));
  return train::dataset_from_waveforms(waves);
}

EvalReport evaluate_dirs(const fs::path& real, const fs::path& fake, int k, std::uint64_t seed) {
  const auto names = wav_names(real);
  if (names.empty()) throw std::runtime_error("no WAV files in " + real.string());
  EvalReport r;
  std::vector<float> real_frames, fake_frames;
  double f0_sum = 0.0;
  int f0_count = 0;
  for (const auto& n : names) {
    if (!fs::exists(fake / n)) throw std::runtime_error("missing generated clip " + (fake / n).string());
    const auto a = dsp::wav_read(real / n);
    const auto b = dsp::wav_read(fake / n);
    if (a.size() != b.size()) throw std::runtime_error("length mismatch for " + n);
    ClipScores s;
    s.clip = n;
    s.mcd = eval::mcd(a.samples, b.samples);
    const auto ta = eval::extract_f0(a.samples);
    const auto tb = eval::extract_f0(b.samples);
    s.vuv = eval::vuv_error(ta, tb);
    try {
      s.f0corr = eval::f0_corr(ta, tb);
      f0_sum += s.f0corr;
      ++f0_count;
    } catch (const std::invalid_argument&) {
      s.f0corr = std::numeric_limits<double>::quiet_NaN();
    }
    r.mean_mcd += s.mcd;
    r.mean_vuv += s.vuv;
    r.clips.push_back(s);
    const auto ma = dsp::mel_condition(a).frames;
    const auto mb = dsp::mel_condition(b).frames;
    real_frames.insert(real_frames.end(), ma.values().begin(), ma.values().end());
    fake_frames.insert(fake_frames.end(), mb.values().begin(), mb.values().end());
  }
  const auto n = static_cast<double>(names.size());
  r.mean_mcd /= n;
  r.mean_vuv /= n;
  r.mean_f0corr = f0_count ? f0_sum / f0_count : std::numeric_limits<double>::quiet_NaN();

  auto as_frames = [](const std::vector<float>& v) {
    const auto rows = static_cast<std::int64_t>(v.size()) / dsp::kMelBands;
    return TensorD(Shape{rows, dsp::kMelBands}, std::vector<double>(v.begin(), v.end()));
  };
  const auto rf = as_frames(real_frames);
  r.bins = static_cast<int>(std::min<std::int64_t>(k, rf.dim(0)));
  const auto nj = eval::ndb_jsd(rf, as_frames(fake_frames), r.bins, 0.05, seed);
  r.ndb = nj.ndb;
  r.jsd = nj.jsd;
  return r;
}

void write_eval_csv(const EvalReport& r, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  char line[256];
  out << "clip,mcd,vuv,f0corr,ndb,jsd\n";
  for (const auto& c : r.clips) {
    std::snprintf(line, sizeof(line), ",%.6f,%.6f,%.6f,,\n", c.mcd, c.vuv, c.f0corr);
    out << c.clip << line;
  }
  std::snprintf(line, sizeof(line), "mean,%.6f,%.6f,%.6f,%d,%.6f\n", r.mean_mcd, r.mean_vuv, r.mean_f0corr, r.ndb,
                r.jsd);
  out << line;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace linvoc::experiment
