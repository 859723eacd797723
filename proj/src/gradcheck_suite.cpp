// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/gradcheck_suite.hpp"

#include <random>
#include <stdexcept>
#include <utility>

#include "linvoc/ait.hpp"
#include "linvoc/critics.hpp"
#include "linvoc/gradcheck.hpp"
#include "linvoc/objectives.hpp"
#include "linvoc/rng.hpp"

namespace linvoc {
namespace {

using VarD = ad::Var<double>;
using Vars = std::vector<VarD>;
using Graph = ad::Graph<double>;

class Suite {
 public:
  Suite(const SuiteOptions& opts, const std::function<void(const SuiteRow&)>& on_row) : opts_(opts), on_row_(on_row) {}

  TensorD rand(Shape shape, const std::string& tag, double lo = -1.0, double hi = 1.0) {
    Rng rng(derive_seed(opts_.seed, "gradcheck/" + tag, counter_++));
    std::uniform_real_distribution<double> u(lo, hi);
    TensorD t(std::move(shape));
    for (auto& v : t.values()) v = u(rng);
    return t;
  }

  /// sum(y * W) for a fixed random W, so every output entry carries gradient.
  VarD weighted(const VarD& y) {
    Rng rng(derive_seed(opts_.seed, "gradcheck/weights", static_cast<std::uint64_t>(y.size())));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TensorD w(y.shape());
    for (auto& v : w.values()) v = u(rng);
    return ad::sum(ad::mul(y, y.graph->constant(std::move(w))));
  }

  void add(const std::string& kind, const std::string& name, const GradCheckReport& rep) {
    SuiteRow row;
    row.kind = kind;
    row.name = name;
    row.max_rel_error = rep.max_rel_error;
    row.probes = rep.probes;
    row.worst = rep.worst;
    row.passed = rep.probes > 0 && rep.max_rel_error < opts_.tolerance;
    rows_.push_back(row);
    if (on_row_) on_row_(row);
  }

  /// Input gradient of weighted(op(inputs)).
  void op(const std::string& name, std::vector<TensorD> inputs, const std::function<VarD(const Vars&)>& f,
          GradCheckOptions gopts = {}, const std::string& kind = "op") {
    gopts.seed = opts_.seed;
    add(kind, name, grad_check([&](Graph&, const Vars& v) { return weighted(f(v)); }, std::move(inputs), gopts));
  }

  /// Parameter and input gradients, merged into one row.
  void model(const std::string& kind, const std::string& name, ParamSet<double>& params, std::vector<TensorD> inputs,
             const std::function<VarD(ParamBinder<double>&, const Vars&)>& f, GradCheckOptions gopts) {
    gopts.seed = opts_.seed;
    auto p = grad_check_params(
        params,
        [&](Graph& g, ParamBinder<double>& bind) {
          Vars v;
          for (const auto& t : inputs) v.push_back(g.constant(t));
          return f(bind, v);
        },
        gopts);
    GradCheckReport in;
    if (!inputs.empty()) {
      in = grad_check(
          [&](Graph& g, const Vars& v) {
            ParamBinder<double> bind(g, std::as_const(params));
            return f(bind, v);
          },
          inputs, gopts);
    }
    if (in.max_rel_error > p.max_rel_error) {
      p.max_rel_error = in.max_rel_error;
      p.worst = in.worst;
    }
    p.probes += in.probes;
    add(kind, name, p);
  }

  void randomize(ParamSet<double>& ps, double scale) {
    for (auto& p : ps) p.value = rand(p.value.shape(), p.name, -scale, scale);
  }

  std::vector<SuiteRow> take() { return std::move(rows_); }

  const SuiteOptions& opts() const { return opts_; }

 private:
  const SuiteOptions& opts_;
  const std::function<void(const SuiteRow&)>& on_row_;
  std::vector<SuiteRow> rows_;
  std::uint64_t counter_ = 0;
};

void op_checks(Suite& s) {
  using namespace ad;
  const Shape m{3, 4};
  s.op("add", {s.rand(m, "a"), s.rand(m, "b")}, [](const Vars& v) { return add(v[0], v[1]); });
  s.op("add_broadcast", {s.rand(m, "a"), s.rand({4}, "b")}, [](const Vars& v) { return add(v[0], v[1]); });
  s.op("sub", {s.rand(m, "a"), s.rand({4}, "b")}, [](const Vars& v) { return sub(v[0], v[1]); });
  s.op("mul", {s.rand(m, "a"), s.rand(m, "b")}, [](const Vars& v) { return mul(v[0], v[1]); });
  s.op("mul_broadcast", {s.rand(m, "a"), s.rand({1}, "b")}, [](const Vars& v) { return mul(v[0], v[1]); });
  s.op("scale", {s.rand(m, "a")}, [](const Vars& v) { return scale(v[0], -1.7); });
  s.op("add_scalar", {s.rand(m, "a")}, [](const Vars& v) { return add_scalar(v[0], 0.3); });
  s.op("matmul", {s.rand({3, 5}, "a"), s.rand({5, 2}, "b")}, [](const Vars& v) { return matmul(v[0], v[1]); });
  s.op("matmul_trans", {s.rand({5, 3}, "a"), s.rand({2, 5}, "b")},
       [](const Vars& v) { return matmul(v[0], v[1], true, true); });
  s.op("matmul_batched", {s.rand({2, 3, 4}, "a"), s.rand({2, 4, 3}, "b")},
       [](const Vars& v) { return matmul(v[0], v[1]); });
  s.op("conv1d", {s.rand({2, 11}, "x"), s.rand({3, 2, 3}, "w"), s.rand({3}, "b")},
       [](const Vars& v) { return conv1d<double>(v[0], v[1], v[2], Conv1dOptions{2, 2, 2, 1}); });
  s.op("conv1d_grouped", {s.rand({4, 9}, "x"), s.rand({4, 2, 3}, "w")},
       [](const Vars& v) { return conv1d<double>(v[0], v[1], std::nullopt, Conv1dOptions{1, 1, 1, 2}); });
  s.op("conv2d", {s.rand({2, 5, 6}, "x"), s.rand({3, 2, 3, 3}, "w"), s.rand({3}, "b")},
       [](const Vars& v) { return conv2d<double>(v[0], v[1], v[2], Conv2dOptions{1, 2, 1, 1}); });
  s.op("transpose", {s.rand({2, 3, 4}, "a")}, [](const Vars& v) { return transpose(v[0], {2, 0, 1}); });
  s.op("reshape", {s.rand(m, "a")}, [](const Vars& v) { return reshape(v[0], Shape{2, 6}); });
  s.op("slice", {s.rand(m, "a")}, [](const Vars& v) { return slice(v[0], 1, 1, 2); });
  s.op("concat", {s.rand(m, "a"), s.rand({3, 2}, "b")}, [](const Vars& v) { return concat(Vars{v[0], v[1]}, 1); });
  s.op("sum", {s.rand(m, "a")}, [](const Vars& v) { return sum(v[0]); });
  s.op("mean", {s.rand(m, "a")}, [](const Vars& v) { return mean(v[0]); });
  s.op("square", {s.rand(m, "a")}, [](const Vars& v) { return square(v[0]); });
  s.op("sqrt", {s.rand(m, "a", 0.2, 2.0)}, [](const Vars& v) { return ad::sqrt(v[0]); });
  s.op("exp", {s.rand(m, "a")}, [](const Vars& v) { return ad::exp(v[0]); });
  s.op("log", {s.rand(m, "a", 0.2, 2.0)}, [](const Vars& v) { return ad::log(v[0]); });
  s.op("softmax", {s.rand(m, "a")}, [](const Vars& v) { return softmax(v[0]); });
  s.op("gelu", {s.rand(m, "a")}, [](const Vars& v) { return gelu(v[0]); });
  s.op("leaky_relu", {s.rand(m, "a")}, [](const Vars& v) { return leaky_relu(v[0], 0.2); });
  s.op("layer_norm", {s.rand(m, "a")}, [](const Vars& v) { return layer_norm(v[0], 1e-5); });
  s.op("avg_pool1d", {s.rand({2, 8}, "a")}, [](const Vars& v) { return avg_pool1d(v[0], 2); });
  s.op("gather", {s.rand({5}, "a")},
       [](const Vars& v) { return gather(v[0], {0, 4, -1, 2, 2, 1}, Shape{2, 3}); });
  s.op("location_variable_conv", {s.rand({2, 8}, "x"), s.rand({2, 3, 2, 3}, "k"), s.rand({2, 3}, "b")},
       [](const Vars& v) { return location_variable_conv(v[0], v[1], v[2], 4); });
  s.op("location_variable_conv_dilated", {s.rand({2, 12}, "x"), s.rand({3, 2, 2, 3}, "k"), s.rand({3, 2}, "b")},
       [](const Vars& v) { return location_variable_conv(v[0], v[1], v[2], 4, 3); });
  s.op("frame", {s.rand({20}, "a")}, [](const Vars& v) { return frame(v[0], 8, 4); });
  s.op("repeat_columns", {s.rand({2, 3}, "a")}, [](const Vars& v) { return repeat_columns(v[0], 3); });
}

void block_checks(Suite& s) {
  ait::DenoiserConfig cfg;
  cfg.hidden_dim = s.opts().hidden;
  cfg.n_heads = 2;
  cfg.n_layers = 1;
  cfg.postconv_channels = 3;
  cfg.lvc_layers = 1;
  cfg.step_pe_dim = 16;
  ait::Denoiser<double> d(cfg, derive_seed(s.opts().seed, "gradcheck/denoiser"));
  s.randomize(d.params(), 0.3);
  const int h = cfg.hidden_dim;
  const TensorD mel = s.rand({2, dsp::kMelBands}, "mel", -6.0, 1.0);
  const int t_index = 321;

  GradCheckOptions few;
  few.max_probes_per_tensor = 6;
  // leaky-relu kinks are dense in the conv stacks; a smaller step avoids straddling them
  GradCheckOptions kinked = few;
  kinked.h = 1e-6;

  auto temb = [&](ParamBinder<double>& bind) { return ait::step_embedding(bind, t_index, cfg.step_pe_dim); };
  s.model("block", "taln", d.params(), {s.rand({2, h}, "x")},
          [&](ParamBinder<double>& b, const Vars& v) { return s.weighted(ait::taln(b, "block0.ln1", v[0], temb(b))); },
          few);
  s.model("block", "self_attention", d.params(), {s.rand({3, h}, "x")},
          [&](ParamBinder<double>& b, const Vars& v) {
            return s.weighted(ait::attention(b, "block0.self", v[0], v[0], cfg.n_heads, true));
          },
          few);
  s.model("block", "cross_attention", d.params(), {s.rand({3, h}, "q")},
          [&](ParamBinder<double>& b, const Vars& v) {
            return s.weighted(ait::attention(b, "block0.cross", v[0], d.mel_hidden(b, mel), cfg.n_heads, false));
          },
          few);
  s.model("block", "conv_mlp", d.params(), {s.rand({4, h}, "x")},
          [&](ParamBinder<double>& b, const Vars& v) { return s.weighted(ait::conv_mlp(b, "block0.mlp", v[0], cfg)); },
          few);
  s.model("block", "ait_block", d.params(), {s.rand({8, h}, "tokens")},
          [&](ParamBinder<double>& b, const Vars& v) {
            return s.weighted(ait::ait_block(b, "block0", v[0], d.mel_hidden(b, mel), temb(b), cfg));
          },
          few);
  s.model("block", "lvc_post_conv", d.params(), {s.rand({512}, "x")},
          [&](ParamBinder<double>& b, const Vars& v) {
            return s.weighted(ait::post_conv(b, v[0], d.mel_hidden(b, mel), temb(b), cfg));
          },
          kinked);
  s.model("block", "denoiser", d.params(), {s.rand({512}, "x_t")},
          [&](ParamBinder<double>& b, const Vars& v) { return s.weighted(d.forward(b, v[0], mel, t_index)); }, kinked);
}

critics::CriticConfig tiny_critics() {
  critics::CriticConfig c;
  c.spectral_cfg = {64, 64, 16};
  c.widths = {3, 3, 4, 4};
  return c;
}

void critic_checks(Suite& s) {
  const auto cfg = tiny_critics();
  critics::CriticEnsemble<double> ens(cfg, derive_seed(s.opts().seed, "gradcheck/critic"));
  s.randomize(ens.params(), 0.4);
  GradCheckOptions opts;
  opts.max_probes_per_tensor = 6;
  opts.h = 1e-6;
  const auto w = s.rand({256}, "w");
  auto mix = [](const std::vector<VarD>& scores) {
    VarD total = scores[0];
    for (std::size_t i = 1; i < scores.size(); ++i) total = ad::add(total, ad::scale(scores[i], 1.0 + 0.5 * i));
    return total;
  };
  s.model("critic", "spectral_critic", ens.params(), {w},
          [&](ParamBinder<double>& b, const Vars& v) { return critics::spectral_critic(b, v[0], cfg); }, opts);
  s.model("critic", "multi_scale_critic", ens.params(), {w},
          [&](ParamBinder<double>& b, const Vars& v) { return mix(critics::msd_critic(b, v[0], cfg)); }, opts);
  s.model("critic", "multi_period_critic", ens.params(), {w},
          [&](ParamBinder<double>& b, const Vars& v) { return mix(critics::mpd_critic(b, v[0], cfg)); }, opts);
}

void loss_checks(Suite& s) {
  s.op("diffusion_loss", {s.rand({64}, "a"), s.rand({64}, "b")},
       [](const Vars& v) { return objectives::diffusion_loss(v[0], v[1]); }, {}, "loss");
  const objectives::StftBank bank;
  for (std::size_t i = 0; i < bank.configs.size(); ++i) {
    const auto& c = bank.configs[i];
    const std::int64_t len = std::max<std::int64_t>(512, c.win_length);
    const auto target = s.rand({len}, "target");
    GradCheckOptions opts;
    opts.max_probes_per_tensor = 24;
    opts.seed = s.opts().seed;
    s.add("loss", "stft_loss_" + std::to_string(c.n_fft),
          grad_check([&](Graph& g, const Vars& v) { return objectives::stft_loss_at(v[0], g.constant(target), c); },
                     {s.rand({len}, "x")}, opts));
  }

  const auto cfg = tiny_critics();
  critics::CriticEnsemble<double> ens(cfg, derive_seed(s.opts().seed, "gradcheck/critic-loss"));
  s.randomize(ens.params(), 0.4);
  GradCheckOptions opts;
  opts.max_probes_per_tensor = 6;
  opts.h = 1e-6;
  const auto real = s.rand({256}, "real");
  s.model("loss", "adv_loss_generator", ens.params(), {s.rand({256}, "fake")},
          [&](ParamBinder<double>& b, const Vars& v) { return objectives::adv_loss_generator(ens(b, v[0]).scores); },
          opts);
  s.model("loss", "adv_loss_discriminator", ens.params(), {s.rand({256}, "fake")},
          [&](ParamBinder<double>& b, const Vars& v) {
            auto& g = *v[0].graph;
            return objectives::adv_loss_discriminator(ens(b, v[0]).scores, ens(b, g.constant(real)).scores);
          },
          opts);
  s.model("loss", "generator_total_stage3", ens.params(), {s.rand({512}, "fake"), s.rand({512}, "target")},
          [&](ParamBinder<double>& b, const Vars& v) {
            auto l_adv = objectives::adv_loss_generator(ens(b, v[0]).scores);
            auto l_s = objectives::stft_loss_at(v[0], v[1], bank.configs[0]);
            return objectives::total_generator_loss(l_adv, l_s, objectives::diffusion_loss(v[0], v[1]), 3);
          },
          opts);
}

void fault_check(Suite& s) {
  s.add("fault", "injected_wrong_backward",
        grad_check(
            [&](Graph& g, const Vars& v) {
              // forward is x^2, backward claims d/dx = 1
              auto bad = g.record(ad::square(v[0]).value(), {v[0].id}, [src = v[0].id](Graph& gr, int self) {
                const auto& up = gr.node_grad(self);
                auto* dst = gr.grad_slot(src);
                for (std::int64_t i = 0; i < up.size(); ++i) (*dst)[i] += up[i];
              });
              return s.weighted(bad);
            },
            {s.rand({4}, "fault", 1.0, 2.0)}));
}

}  // namespace

std::vector<SuiteRow> run_gradcheck_suite(const SuiteOptions& opts, const std::function<void(const SuiteRow&)>& on_row) {
  if (opts.hidden < 2 || opts.hidden > 16 || opts.hidden % 2 != 0) {
    throw std::invalid_argument("gradcheck suite: hidden width must be even and in [2, 16]");
  }
  Suite s(opts, on_row);
  op_checks(s);
  block_checks(s);
  critic_checks(s);
  loss_checks(s);
  if (opts.inject_fault) fault_check(s);
  return s.take();
}

}  // namespace linvoc
