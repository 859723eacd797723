// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: synthetic data, training, sampling, evaluation,
// gradient checks and speed measurement.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "linvoc/checkpoint.hpp"
#include "linvoc/diffusion.hpp"
#include "linvoc/eval.hpp"
#include "linvoc/experiment.hpp"
#include "linvoc/gradcheck_suite.hpp"
#include "linvoc/trainer.hpp"

namespace fs = std::filesystem;
using namespace linvoc;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
};

experiment::ExperimentConfig resolve(const Common& c) {
  auto cfg = experiment::resolve_config(c.config, c.sets);
  std::cout << "# resolved configuration\n" << format_kv(experiment::to_kv(cfg)) << std::flush;
  return cfg;
}

diffusion::DenoiserFn as_fn(const ait::Denoiser<float>& d) {
  return [&d](const TensorF& x, const dsp::MelCondition& c, int t) { return d.predict(x, c, t); };
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--set", c.sets, "override one key, key=value (repeatable)");
}

int cmd_synth_data(const Common& common, const fs::path& out) {
  const auto cfg = resolve(common);
  const auto entries = experiment::write_synth_data(cfg.data, out);
  std::printf("wrote %zu clips to %s\n", entries.size(), out.string().c_str());
  return 0;
}

int cmd_train(const Common& common, const std::string& data, const fs::path& out, const fs::path& resume,
              int log_every) {
  const auto cfg = resolve(common);
  auto dataset = data == "synth" ? train::synth_dataset(cfg.data) : experiment::load_dataset_dir(data);
  train::Trainer trainer(cfg.train, cfg.denoiser, cfg.critics, std::move(dataset));
  train::RunOptions opts;
  opts.out_dir = out;
  opts.resume = resume;
  opts.on_step = [&](const objectives::LossReport& r) {
    if (log_every > 0 && (r.step + 1) % log_every == 0) {
      std::printf("step %lld stage %d l_diff %.6f l_s %.6f l_adv_g %.6f l_adv_d %.6f\n",
                  static_cast<long long>(r.step), r.stage, r.l_diff, r.l_s, r.l_adv_g, r.l_adv_d);
      std::fflush(stdout);
    }
  };
  const auto final_path = train::run_training(trainer, opts);
  std::printf("final checkpoint %s\n", final_path.string().c_str());
  return 0;
}

int cmd_sample(const Common& common, const fs::path& ckpt_path, const fs::path& mel_path, int steps,
               std::uint64_t seed, const fs::path& out) {
  resolve(common);
  const auto ckpt = Checkpoint::load(ckpt_path);
  const auto d = train::load_denoiser(ckpt);
  const auto mel = mel_path.extension() == ".wav" ? dsp::mel_condition(dsp::wav_read(mel_path))
                                                  : dsp::read_mel_blob(mel_path);
  const auto t0 = std::chrono::steady_clock::now();
  const auto w = diffusion::sample(as_fn(d), mel, steps, seed);
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  dsp::wav_write(w, out);
  const double seconds = static_cast<double>(w.samples.size()) / dsp::kSampleRate;
  std::printf("wrote %s (%.3f s), N=%d, RTF %.4f\n", out.string().c_str(), seconds, steps, dt.count() / seconds);
  return 0;
}

int cmd_eval(const Common& common, const fs::path& real, const fs::path& fake, const fs::path& report, int k,
             std::uint64_t seed) {
  resolve(common);
  const auto r = experiment::evaluate_dirs(real, fake, k, seed);
  for (const auto& c : r.clips) {
    std::printf("%s mcd %.4f vuv %.4f f0corr %.4f\n", c.clip.c_str(), c.mcd, c.vuv, c.f0corr);
  }
  std::printf("mean mcd %.4f vuv %.4f f0corr %.4f ndb %d/%d jsd %.5f\n", r.mean_mcd, r.mean_vuv, r.mean_f0corr,
              r.ndb, r.bins, r.jsd);
  if (!report.empty()) experiment::write_eval_csv(r, report);
  return 0;
}

int cmd_gradcheck(const Common& common, const SuiteOptions& opts, const fs::path& report) {
  resolve(common);
  std::ofstream csv;
  if (!report.empty()) {
    if (report.has_parent_path()) fs::create_directories(report.parent_path());
    csv.open(report);
    csv << "kind,name,max_rel_error,probes,worst,passed\n";
  }
  int failed = 0;
  std::printf("%-7s %-32s %12s %7s  %s\n", "kind", "name", "max_rel", "probes", "result");
  run_gradcheck_suite(opts, [&](const SuiteRow& r) {
    std::printf("%-7s %-32s %12.3e %7lld  %s", r.kind.c_str(), r.name.c_str(), r.max_rel_error,
                static_cast<long long>(r.probes), r.passed ? "ok" : "FAIL");
    if (!r.passed) std::printf("  (%s)", r.worst.c_str());
    std::printf("\n");
    std::fflush(stdout);
    if (csv.is_open()) {
      csv << r.kind << "," << r.name << "," << r.max_rel_error << "," << r.probes << ",\"" << r.worst << "\","
          << (r.passed ? 1 : 0) << "\n";
    }
    failed += r.passed ? 0 : 1;
  });
  std::printf("%d failing check(s)\n", failed);
  return failed == 0 ? 0 : 1;
}

int cmd_bench_rtf(const Common& common, const std::vector<int>& steps, double seconds, int runs,
                  const fs::path& ckpt_path) {
  const auto cfg = resolve(common);
  const auto d = ckpt_path.empty() ? ait::Denoiser<float>(cfg.denoiser)
                                   : train::load_denoiser(Checkpoint::load(ckpt_path));
  // frames of a synthetic tone, enough for the requested duration
  dsp::Waveform w;
  const auto n = static_cast<std::size_t>(seconds * dsp::kSampleRate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = static_cast<float>(0.5 * std::sin(0.0628 * static_cast<double>(i)));
  const auto mel = dsp::mel_condition(w);
  const double audio = static_cast<double>(mel.num_samples()) / dsp::kSampleRate;
  std::printf("audio %.3f s, %lld frames, %d timed run(s)\n", audio, static_cast<long long>(mel.num_frames()), runs);
  for (int s : steps) {
    const auto r = eval::rtf(as_fn(d), mel, s, runs);
    std::printf("N=%d RTF %.5f\n", s, r.median);
    std::fflush(stdout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linvoc: diffusion waveform vocoder on synthetic audio"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth-data", "write the synthetic dataset");
  add_common(synth, common);
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train the denoiser and critics");
  add_common(tr, common);
  std::string train_data = "synth", train_out, resume;
  int log_every = 100;
  tr->add_option("--data", train_data, "dataset directory, or 'synth' to generate in memory");
  tr->add_option("--out", train_out, "run directory")->required();
  tr->add_option("--resume", resume, "checkpoint manifest to resume from")->check(CLI::ExistingFile);
  tr->add_option("--log-every", log_every, "print losses every n steps (0 disables)");

  auto* sm = app.add_subcommand("sample", "generate a waveform from a mel condition");
  add_common(sm, common);
  std::string ckpt, mel, sample_out;
  int steps = 3;
  std::uint64_t seed = 0;
  sm->add_option("--checkpoint", ckpt, "checkpoint manifest")->required()->check(CLI::ExistingFile);
  sm->add_option("--mel", mel, "mel blob, or a WAV to analyse")->required()->check(CLI::ExistingFile);
  sm->add_option("--steps", steps, "sampling steps N")->check(CLI::Range(1, 1000));
  sm->add_option("--seed", seed, "noise seed");
  sm->add_option("--out", sample_out, "output WAV")->required();

  auto* ev = app.add_subcommand("eval", "score generated clips against references");
  add_common(ev, common);
  std::string real, fake, report;
  int bins = 50;
  std::uint64_t eval_seed = 0;
  ev->add_option("--real", real, "reference WAV directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--fake", fake, "generated WAV directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--report", report, "CSV report path");
  ev->add_option("--bins", bins, "NDB/JSD cluster count")->check(CLI::PositiveNumber);
  ev->add_option("--seed", eval_seed, "clustering seed");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every backward rule");
  add_common(gc, common);
  SuiteOptions gopts;
  std::string gc_report;
  gc->add_flag("--inject-fault", gopts.inject_fault, "add a check with a deliberately wrong gradient");
  gc->add_option("--hidden", gopts.hidden, "hidden width of the model blocks")->check(CLI::Range(2, 16));
  gc->add_option("--tolerance", gopts.tolerance, "maximum relative error");
  gc->add_option("--seed", gopts.seed, "input seed");
  gc->add_option("--report", gc_report, "CSV report path");

  auto* br = app.add_subcommand("bench-rtf", "real-time factor of the sampler");
  add_common(br, common);
  std::vector<int> bench_steps{3, 100};
  double seconds = 1.0;
  int runs = 5;
  std::string bench_ckpt;
  br->add_option("--steps", bench_steps, "sampling steps (repeatable)")->check(CLI::Range(1, 1000));
  br->add_option("--seconds", seconds, "audio length")->check(CLI::PositiveNumber);
  br->add_option("--runs", runs, "timed runs per setting")->check(CLI::PositiveNumber);
  br->add_option("--checkpoint", bench_ckpt, "checkpoint manifest (default: fresh weights)")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return cmd_synth_data(common, synth_out);
    if (*tr) return cmd_train(common, train_data, train_out, resume, log_every);
    if (*sm) return cmd_sample(common, ckpt, mel, steps, seed, sample_out);
    if (*ev) return cmd_eval(common, real, fake, report, bins, eval_seed);
    if (*gc) return cmd_gradcheck(common, gopts, gc_report);
    if (*br) return cmd_bench_rtf(common, bench_steps, seconds, runs, bench_ckpt);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
