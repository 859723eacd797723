// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <utility>

#include "linvoc/rng.hpp"

namespace linvoc::train {
namespace {

constexpr double kPeak = 0.95;

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string& key, const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    KeyValues one{{key, item}};
    int v = 0;
    kv_get(one, key, v);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
  return out;
}

KeyValues json_to_kv(const nlohmann::json& j) {
  KeyValues kv;
  for (auto it = j.begin(); it != j.end(); ++it) kv[it.key()] = it.value().get<std::string>();
  return kv;
}

nlohmann::json kv_to_json(const KeyValues& kv) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

std::vector<float> envelope(Envelope kind, std::int64_t n, Rng& rng) {
  std::vector<float> env(static_cast<std::size_t>(n), 1.0f);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double sr = dsp::kSampleRate;
  if (kind == Envelope::kSmooth) {
    double f[3], ph[3], c[3], csum = 0.0;
    for (int k = 0; k < 3; ++k) {
      f[k] = 0.5 + 3.5 * u(rng);
      ph[k] = 2.0 * std::numbers::pi * u(rng);
      c[k] = 0.2 + 0.8 * u(rng);
      csum += c[k];
    }
    for (std::int64_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += c[k] * std::sin(2.0 * std::numbers::pi * f[k] * i / sr + ph[k]);
      env[static_cast<std::size_t>(i)] = static_cast<float>(0.6 + 0.4 * s / csum);
    }
  } else if (kind == Envelope::kAttackDecay) {
    const double attack = 0.02 * sr;
    const double tau = (0.3 + 0.7 * u(rng)) * sr;
    for (std::int64_t i = 0; i < n; ++i) {
      const double a = i < attack ? i / attack : 1.0;
      env[static_cast<std::size_t>(i)] = static_cast<float>(a * std::exp(-std::max(0.0, i - attack) / tau));
    }
  }
  return env;
}

Clip make_clip(const SynthDatasetSpec& spec, int index) {
  Rng rng(derive_seed(spec.seed, "clip", static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::int64_t n = spec.clip_samples;
  const double sr = dsp::kSampleRate;
  const double f0 = spec.f0_min + (spec.f0_max - spec.f0_min) * u(rng);
  const double gamma = spec.decay_min + (spec.decay_max - spec.decay_min) * u(rng);
  const int max_h = static_cast<int>(std::floor((sr / 2.0 - 1.0) / f0));
  const int harmonics = spec.n_harmonics > 0 ? std::min(spec.n_harmonics, max_h) : max_h;

  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int h = 1; h <= harmonics; ++h) {
    const double amp = std::pow(static_cast<double>(h), -gamma) * (0.5 + 0.5 * u(rng));
    const double phase = 2.0 * std::numbers::pi * u(rng);
    const double w = 2.0 * std::numbers::pi * f0 * h / sr;
    for (std::int64_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] += amp * std::sin(w * i + phase);
  }
  const auto env = envelope(spec.envelope, n, rng);
  for (std::int64_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] *= env[static_cast<std::size_t>(i)];

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (u(rng) < spec.noise_burst_prob) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto len = static_cast<std::int64_t>((0.05 + 0.15 * u(rng)) * sr);
    const auto burst = std::min(len, n);
    const auto start = static_cast<std::int64_t>(u(rng) * static_cast<double>(n - burst));
    for (std::int64_t i = 0; i < burst; ++i) {
      const double win = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / std::max<std::int64_t>(burst - 1, 1));
      x[static_cast<std::size_t>(start + i)] += 0.3 * peak * win * nd(rng);
    }
  }
  if (spec.noise_floor > 0.0) {
    std::normal_distribution<double> nd(0.0, spec.noise_floor);
    for (auto& v : x) v += nd(rng);
  }
  peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  Clip clip;
  clip.f0 = f0;
  clip.audio = TensorF(Shape{n});
  const double g = peak > 0.0 ? kPeak / peak : 0.0;
  for (std::int64_t i = 0; i < n; ++i) clip.audio[i] = static_cast<float>(x[static_cast<std::size_t>(i)] * g);
  clip.mel = dsp::mel_condition(clip.audio.values());
  return clip;
}

void check_all_finite(const ParamSet<float>& params, const char* what) {
  for (const auto& p : params) {
    if (!p.grad.all_finite()) throw NonFiniteError(std::string(what) + ": non-finite gradient in " + p.name);
  }
}

TensorF crop(const TensorF& audio, std::int64_t start, std::int64_t len) {
  return TensorF(Shape{len}, std::vector<float>(audio.storage().begin() + start, audio.storage().begin() + start + len));
}

void store_adam(Checkpoint& ckpt, const std::string& prefix, const AdamState& s) {
  for (const auto& [name, m] : s.m) ckpt.put(prefix + "m/" + name, m);
  for (const auto& [name, v] : s.v) ckpt.put(prefix + "v/" + name, v);
}

void load_adam(const Checkpoint& ckpt, const std::string& prefix, const ParamSet<float>& params, std::int64_t t,
               AdamState& s) {
  s = AdamState{};
  s.t = t;
  if (t == 0) return;
  for (const auto& p : params) {
    s.m[p.name] = ckpt.get(prefix + "m/" + p.name);
    s.v[p.name] = ckpt.get(prefix + "v/" + p.name);
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (stage1_end < 0 || stage1_end > stage2_end) fail("need 0 <= stage1_end <= stage2_end");
  if (total_steps < 0) fail("total_steps must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (clip_samples_short < 0 || clip_samples_short % dsp::kFrameHop != 0) fail("clip_samples_short must be a multiple of 256");
  if (clip_samples_long < 0 || clip_samples_long % dsp::kFrameHop != 0) fail("clip_samples_long must be a multiple of 256");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) fail("betas must lie in [0, 1)");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (d_update_period_stage3 < 1) fail("d_update_period_stage3 must be >= 1");
  if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  schedule.validate();
}

int stage_for_step(std::int64_t step, const TrainConfig& cfg) {
  if (step < cfg.stage1_end) return 1;
  if (step < cfg.stage2_end) return 2;
  return 3;
}

bool critic_updates_at(std::int64_t step, const TrainConfig& cfg) {
  switch (stage_for_step(step, cfg)) {
    case 1: return false;
    case 2: return true;
    default: return step % cfg.d_update_period_stage3 == 0;
  }
}

std::string to_string(Envelope e) {
  switch (e) {
    case Envelope::kFlat: return "flat";
    case Envelope::kSmooth: return "smooth";
    case Envelope::kAttackDecay: return "attack_decay";
  }
  return "smooth";
}

Envelope envelope_from_string(const std::string& s) {
  if (s == "flat") return Envelope::kFlat;
  if (s == "smooth") return Envelope::kSmooth;
  if (s == "attack_decay") return Envelope::kAttackDecay;
  throw std::invalid_argument("unknown envelope '" + s + "' (flat, smooth, attack_decay)");
}

void SynthDatasetSpec::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("dataset spec: " + m); };
  if (n_clips < 1) fail("n_clips must be >= 1");
  if (clip_samples < dsp::kFrameHop || clip_samples % dsp::kFrameHop != 0) fail("clip_samples must be a positive multiple of 256");
  if (!(f0_min > 0.0) || f0_max < f0_min || f0_max >= dsp::kSampleRate / 2.0) fail("need 0 < f0_min <= f0_max < Nyquist");
  if (n_harmonics < 0) fail("n_harmonics must be >= 0");
  if (decay_min < 0.0 || decay_max < decay_min) fail("need 0 <= decay_min <= decay_max");
  if (noise_burst_prob < 0.0 || noise_burst_prob > 1.0) fail("noise_burst_prob must lie in [0, 1]");
  if (noise_floor < 0.0) fail("noise_floor must be >= 0");
}

Dataset synth_dataset(const SynthDatasetSpec& spec) {
  spec.validate();
  Dataset d;
  for (int i = 0; i < spec.n_clips; ++i) d.clips.push_back(make_clip(spec, i));
  return d;
}

Dataset dataset_from_waveforms(const std::vector<dsp::Waveform>& waves) {
  Dataset d;
  for (const auto& w : waves) {
    if (w.sample_rate != dsp::kSampleRate) throw std::invalid_argument("dataset audio must be 22050 Hz");
    const auto n = w.size() / dsp::kFrameHop * dsp::kFrameHop;
    if (n == 0) throw std::invalid_argument("dataset clip shorter than 256 samples");
    Clip c;
    c.audio = TensorF(Shape{n}, std::vector<float>(w.samples.begin(), w.samples.begin() + n));
    c.mel = dsp::mel_condition(c.audio.values());
    d.clips.push_back(std::move(c));
  }
  if (d.clips.empty()) throw std::invalid_argument("empty dataset");
  return d;
}

void adam_step(ParamSet<float>& params, AdamState& state, const AdamOptions& opt) {
  check_all_finite(params, "adam");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
  for (auto& p : params) {
    auto& m = state.m[p.name];
    auto& v = state.v[p.name];
    if (m.shape() != p.value.shape()) m = TensorF(p.value.shape());
    if (v.shape() != p.value.shape()) v = TensorF(p.value.shape());
    float* w = p.value.data();
    const float* g = p.grad.data();
    float* mm = m.data();
    float* vv = v.data();
    for (std::int64_t i = 0; i < p.value.size(); ++i) {
      const double gi = g[i];
      const double mi = opt.beta1 * mm[i] + (1.0 - opt.beta1) * gi;
      const double vi = opt.beta2 * vv[i] + (1.0 - opt.beta2) * gi * gi;
      mm[i] = static_cast<float>(mi);
      vv[i] = static_cast<float>(vi);
      w[i] = static_cast<float>(w[i] - opt.lr * (mi / bc1) / (std::sqrt(vi / bc2) + opt.eps));
    }
  }
}

double grad_norm(const ParamSet<float>& params) {
  double s = 0.0;
  for (const auto& p : params) {
    for (float g : p.grad.values()) s += static_cast<double>(g) * g;
  }
  return std::sqrt(s);
}

Trainer::Trainer(TrainConfig cfg, ait::DenoiserConfig dcfg, critics::CriticConfig ccfg, Dataset data)
    : cfg_(cfg),
      data_(std::move(data)),
      denoiser_(dcfg, derive_seed(cfg.seed, "denoiser")),
      critics_(std::move(ccfg), derive_seed(cfg.seed, "critic")) {
  cfg_.validate();
  if (data_.clips.empty()) throw std::invalid_argument("trainer needs at least one clip");
  const objectives::StftBank bank;
  std::int64_t widest = 0;
  for (const auto& c : bank.configs) widest = std::max<std::int64_t>(widest, c.win_length);
  for (const auto want : {cfg_.clip_samples_short, cfg_.clip_samples_long}) {
    for (const auto& c : data_.clips) {
      const auto len = (want == 0 || want >= c.audio.size()) ? c.audio.size() : want;
      if (len < widest) {
        throw std::invalid_argument("training crops of " + std::to_string(len) + " samples are shorter than the " +
                                    std::to_string(widest) + "-sample STFT window");
      }
    }
  }
}

std::pair<std::size_t, std::int64_t> Trainer::batch_item(std::int64_t step, int slot) const {
  const auto n = static_cast<std::int64_t>(data_.clips.size());
  const std::int64_t g = step * cfg_.batch_size + slot;
  const std::int64_t epoch = g / n;
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg_.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  const std::size_t clip = order[static_cast<std::size_t>(g % n)];

  const auto len = data_.clips[clip].audio.size();
  const auto want = stage_for_step(step, cfg_) == 3 ? cfg_.clip_samples_long : cfg_.clip_samples_short;
  if (want == 0 || want >= len) return {clip, 0};
  const std::int64_t positions = (len - want) / dsp::kFrameHop + 1;
  Rng crop_rng(derive_seed(cfg_.seed, "crop", static_cast<std::uint64_t>(g)));
  std::uniform_int_distribution<std::int64_t> pick(0, positions - 1);
  return {clip, pick(crop_rng) * dsp::kFrameHop};
}

objectives::LossReport Trainer::train_step() {
  const std::int64_t step = step_;
  const int stage = stage_for_step(step, cfg_);
  const int batch = cfg_.batch_size;
  const float inv_b = 1.0f / static_cast<float>(batch);
  const objectives::StftBank bank;
  Rng stft_rng(derive_seed(cfg_.seed, "stft", static_cast<std::uint64_t>(step)));

  objectives::LossReport rep;
  rep.step = step;
  rep.stage = stage;
  rep.stft_cfg_index = bank.draw(stft_rng);
  const auto& stft_cfg = bank.configs[static_cast<std::size_t>(rep.stft_cfg_index)];

  struct Item {
    TensorF audio;
    TensorF mel;
    diffusion::TrainingPair pair;
  };
  std::vector<Item> items;
  for (int slot = 0; slot < batch; ++slot) {
    const auto [clip, start] = batch_item(step, slot);
    const auto& c = data_.clips[clip];
    const auto want = stage == 3 ? cfg_.clip_samples_long : cfg_.clip_samples_short;
    const auto len = (want == 0 || want >= c.audio.size()) ? c.audio.size() : want;
    Item it;
    it.audio = crop(c.audio, start, len);
    it.mel = dsp::slice_frames(c.mel, start / dsp::kFrameHop, len / dsp::kFrameHop).frames;
    it.pair = diffusion::make_training_pair(
        it.audio, derive_seed(cfg_.seed, "pair", static_cast<std::uint64_t>(step * batch + slot)), cfg_.schedule);
    items.push_back(std::move(it));
  }

  const AdamOptions opt{cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps};
  auto diagnose = [&](const std::string& why) {
    std::ostringstream os;
    os << "step " << step << " (stage " << stage << "): " << why << "; l_diff=" << rep.l_diff << " l_s=" << rep.l_s
       << " l_adv_g=" << rep.l_adv_g << " l_adv_d=" << rep.l_adv_d
       << " |grad_g|=" << grad_norm(denoiser_.params()) << " |grad_d|=" << grad_norm(critics_.params());
    return os.str();
  };

  // Critic first, on detached generator output.
  const bool update_d = critic_updates_at(step, cfg_);
  std::optional<ParamSet<float>> critic_backup;
  AdamState adam_d_backup;
  if (update_d) {
    critics_.params().zero_grad();
    for (const auto& it : items) {
      ad::Graph<float> g;
      ParamBinder<float> gen(g, std::as_const(denoiser_.params()));
      auto fake = ad::detach(denoiser_.forward(gen, g.constant(it.pair.x_t), it.mel, it.pair.t));
      ParamBinder<float> crit(g, critics_.params());
      auto s_fake = critics_(crit, fake);
      auto s_real = critics_(crit, g.constant(it.audio));
      auto l_d = objectives::adv_loss_discriminator(s_fake.scores, s_real.scores);
      rep.l_adv_d += static_cast<double>(l_d.value().item()) * inv_b;
      g.backward(ad::scale(l_d, inv_b));
    }
    if (!std::isfinite(rep.l_adv_d)) throw NonFiniteError(diagnose("non-finite critic loss"));
    try {
      check_all_finite(critics_.params(), "critic");
    } catch (const NonFiniteError& e) {
      throw NonFiniteError(diagnose(e.what()));
    }
    critic_backup = critics_.params().cast<float>();
    adam_d_backup = adam_d_;
    adam_step(critics_.params(), adam_d_, opt);
  }

  denoiser_.params().zero_grad();
  for (const auto& it : items) {
    ad::Graph<float> g;
    ParamBinder<float> gen(g, denoiser_.params());
    auto x_hat = denoiser_.forward(gen, g.constant(it.pair.x_t), it.mel, it.pair.t);
    auto target = g.constant(it.audio);
    auto l_diff = objectives::diffusion_loss(x_hat, target);
    auto l_s = objectives::stft_loss_at(x_hat, target, stft_cfg);
    auto l_adv = g.constant(TensorF::scalar(0.0f));
    if (stage > 1) {
      ParamBinder<float> crit(g, std::as_const(critics_.params()));
      l_adv = objectives::adv_loss_generator(critics_(crit, x_hat).scores);
    }
    auto total = objectives::total_generator_loss(l_adv, l_s, l_diff, stage);
    rep.l_diff += static_cast<double>(l_diff.value().item()) * inv_b;
    rep.l_s += static_cast<double>(l_s.value().item()) * inv_b;
    rep.l_adv_g += static_cast<double>(l_adv.value().item()) * inv_b;
    rep.l_gen += static_cast<double>(total.value().item()) * inv_b;
    g.backward(ad::scale(total, inv_b));
  }
  auto roll_back_critic = [&] {
    if (!critic_backup) return;
    for (auto& p : critics_.params()) p.value = critic_backup->at(p.name).value;
    adam_d_ = adam_d_backup;
  };
  if (!rep.all_finite()) {
    roll_back_critic();
    throw NonFiniteError(diagnose("non-finite loss"));
  }
  try {
    adam_step(denoiser_.params(), adam_g_, opt);
  } catch (const NonFiniteError& e) {
    roll_back_critic();
    throw NonFiniteError(diagnose(e.what()));
  }
  if (update_d) ++critic_updates_;
  rep.d_updated = update_d;
  ++step_;
  return rep;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  store_params(ck, "denoiser/", denoiser_.params());
  store_params(ck, "critic/", critics_.params());
  store_adam(ck, "adam/denoiser/", adam_g_);
  store_adam(ck, "adam/critic/", adam_d_);
  auto& m = ck.meta();
  m["step"] = step_;
  m["critic_updates"] = critic_updates_;
  m["adam_denoiser_t"] = adam_g_.t;
  m["adam_critic_t"] = adam_d_.t;
  m["denoiser_config"] = kv_to_json(ait::to_kv(denoiser_.config()));
  m["critic_config"] = kv_to_json(to_kv(critics_.config()));
  m["train_config"] = kv_to_json(to_kv(cfg_));
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  const auto& m = ck.meta();
  if (json_to_kv(m.at("denoiser_config")) != ait::to_kv(denoiser_.config())) {
    throw std::runtime_error("checkpoint denoiser config differs from the configured model");
  }
  if (json_to_kv(m.at("critic_config")) != to_kv(critics_.config())) {
    throw std::runtime_error("checkpoint critic config differs from the configured critics");
  }
  load_params(ck, "denoiser/", denoiser_.params());
  load_params(ck, "critic/", critics_.params());
  load_adam(ck, "adam/denoiser/", denoiser_.params(), m.at("adam_denoiser_t").get<std::int64_t>(), adam_g_);
  load_adam(ck, "adam/critic/", critics_.params(), m.at("adam_critic_t").get<std::int64_t>(), adam_d_);
  step_ = m.at("step").get<std::int64_t>();
  critic_updates_ = m.at("critic_updates").get<std::int64_t>();
}

ait::Denoiser<float> load_denoiser(const Checkpoint& ck) {
  const auto cfg = ait::denoiser_config_from_kv(json_to_kv(ck.meta().at("denoiser_config")));
  ait::Denoiser<float> d(cfg);
  load_params(ck, "denoiser/", d.params());
  return d;
}

std::filesystem::path run_training(Trainer& trainer, const RunOptions& opts) {
  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);
  const auto log_path = opts.out_dir / "train_log.csv";
  std::vector<std::string> kept;
  if (!opts.resume.empty()) {
    trainer.restore(Checkpoint::load(opts.resume));
    std::ifstream old(log_path);
    std::string line;
    bool header = true;
    while (std::getline(old, line)) {
      if (header) {
        header = false;
        continue;
      }
      if (!line.empty() && std::stoll(line.substr(0, line.find(','))) < trainer.step()) kept.push_back(line);
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  log << objectives::csv_header() << "\n";
  for (const auto& l : kept) log << l << "\n";
  log.flush();
  write_kv_file(ait::to_kv(trainer.denoiser().config()), opts.out_dir / "model.cfg");

  const auto& cfg = trainer.config();
  auto save = [&](const fs::path& p) {
    trainer.checkpoint().save(p);
    return p;
  };
  while (trainer.step() < cfg.total_steps) {
    const auto rep = trainer.train_step();
    log << objectives::csv_row(rep) << "\n";
    log.flush();
    if (opts.on_step) opts.on_step(rep);
    if (trainer.step() % cfg.checkpoint_every == 0) save(opts.out_dir / ("ckpt_" + std::to_string(trainer.step()) + ".json"));
  }
  return save(opts.out_dir / "final.json");
}

KeyValues to_kv(const TrainConfig& c) {
  return {{"stage1_end", std::to_string(c.stage1_end)},
          {"stage2_end", std::to_string(c.stage2_end)},
          {"total_steps", std::to_string(c.total_steps)},
          {"batch_size", std::to_string(c.batch_size)},
          {"clip_samples_short", std::to_string(c.clip_samples_short)},
          {"clip_samples_long", std::to_string(c.clip_samples_long)},
          {"lr", format_number(c.lr)},
          {"beta1", format_number(c.beta1)},
          {"beta2", format_number(c.beta2)},
          {"eps", format_number(c.eps)},
          {"d_update_period_stage3", std::to_string(c.d_update_period_stage3)},
          {"checkpoint_every", std::to_string(c.checkpoint_every)},
          {"seed", std::to_string(c.seed)},
          {"t_train_max", std::to_string(c.schedule.t_train_max)}};
}

TrainConfig train_config_from_kv(const KeyValues& kv, const TrainConfig& base) {
  TrainConfig c = base;
  kv_get(kv, "stage1_end", c.stage1_end);
  kv_get(kv, "stage2_end", c.stage2_end);
  kv_get(kv, "total_steps", c.total_steps);
  kv_get(kv, "batch_size", c.batch_size);
  kv_get(kv, "clip_samples_short", c.clip_samples_short);
  kv_get(kv, "clip_samples_long", c.clip_samples_long);
  kv_get(kv, "lr", c.lr);
  kv_get(kv, "beta1", c.beta1);
  kv_get(kv, "beta2", c.beta2);
  kv_get(kv, "eps", c.eps);
  kv_get(kv, "d_update_period_stage3", c.d_update_period_stage3);
  kv_get(kv, "checkpoint_every", c.checkpoint_every);
  kv_get(kv, "seed", c.seed);
  kv_get(kv, "t_train_max", c.schedule.t_train_max);
  c.validate();
  return c;
}

KeyValues to_kv(const SynthDatasetSpec& s) {
  const auto num = format_number;
  return {{"n_clips", std::to_string(s.n_clips)},
          {"clip_samples", std::to_string(s.clip_samples)},
          {"f0_min", num(s.f0_min)},
          {"f0_max", num(s.f0_max)},
          {"n_harmonics", std::to_string(s.n_harmonics)},
          {"decay_min", num(s.decay_min)},
          {"decay_max", num(s.decay_max)},
          {"envelope", to_string(s.envelope)},
          {"noise_burst_prob", num(s.noise_burst_prob)},
          {"noise_floor", num(s.noise_floor)},
          {"data_seed", std::to_string(s.seed)}};
}

SynthDatasetSpec synth_spec_from_kv(const KeyValues& kv, const SynthDatasetSpec& base) {
  SynthDatasetSpec s = base;
  kv_get(kv, "n_clips", s.n_clips);
  kv_get(kv, "clip_samples", s.clip_samples);
  kv_get(kv, "f0_min", s.f0_min);
  kv_get(kv, "f0_max", s.f0_max);
  kv_get(kv, "n_harmonics", s.n_harmonics);
  kv_get(kv, "decay_min", s.decay_min);
  kv_get(kv, "decay_max", s.decay_max);
  if (auto it = kv.find("envelope"); it != kv.end()) s.envelope = envelope_from_string(it->second);
  kv_get(kv, "noise_burst_prob", s.noise_burst_prob);
  kv_get(kv, "noise_floor", s.noise_floor);
  kv_get(kv, "data_seed", s.seed);
  s.validate();
  return s;
}

KeyValues to_kv(const critics::CriticConfig& c) {
  return {{"msd_scales", join_ints(c.msd_scales)},
          {"mpd_periods", join_ints(c.mpd_periods)},
          {"critic_widths", join_ints(c.widths)},
          {"spectral_n_fft", std::to_string(c.spectral_cfg.n_fft)},
          {"spectral_win_length", std::to_string(c.spectral_cfg.win_length)},
          {"spectral_hop_length", std::to_string(c.spectral_cfg.hop_length)}};
}

critics::CriticConfig critic_config_from_kv(const KeyValues& kv, const critics::CriticConfig& base) {
  critics::CriticConfig c = base;
  if (auto it = kv.find("msd_scales"); it != kv.end()) c.msd_scales = split_ints("msd_scales", it->second);
  if (auto it = kv.find("mpd_periods"); it != kv.end()) c.mpd_periods = split_ints("mpd_periods", it->second);
  if (auto it = kv.find("critic_widths"); it != kv.end()) c.widths = split_ints("critic_widths", it->second);
  kv_get(kv, "spectral_n_fft", c.spectral_cfg.n_fft);
  kv_get(kv, "spectral_win_length", c.spectral_cfg.win_length);
  kv_get(kv, "spectral_hop_length", c.spectral_cfg.hop_length);
  c.validate();
  return c;
}

}  // namespace linvoc::train
