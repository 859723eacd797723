// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "linvoc/checkpoint.hpp"
#include "linvoc/framing.hpp"
#include "linvoc/kv.hpp"
#include "test_util.hpp"

using namespace linvoc;
using linvoc::testing::kGradTol;
using linvoc::testing::random_tensor;
using linvoc::testing::weighted_sum;
using VarD = ad::Var<double>;
using Vars = std::vector<VarD>;

namespace {

GradCheckReport check_unary(Shape shape, const std::function<VarD(const VarD&)>& op, std::uint64_t seed = 1,
                            double lo = -1.0, double hi = 1.0) {
  return grad_check([&](ad::Graph<double>&, const Vars& v) { return weighted_sum(op(v[0])); },
                    {random_tensor(std::move(shape), seed, lo, hi)});
}

}  // namespace

TEST_CASE("tensor basics") {
  TensorF t(Shape{2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK(t.dim(-1) == 3);
  CHECK(t.reshaped(Shape{3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(t.reshaped(Shape{4, 2}), std::invalid_argument);
  CHECK_THROWS_AS(TensorF(Shape{2}, std::vector<float>{1, 2, 3}), std::invalid_argument);
  CHECK(TensorF::scalar(2.0f).item() == 2.0f);
  auto d = t.cast<double>();
  CHECK(d[5] == 1.5);
  t[0] = std::nanf("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("graph backward accumulates into sinks and resets interior grads") {
  ad::Graph<double> g;
  TensorD sink(Shape{2});
  auto p = g.param(TensorD(Shape{2}, std::vector<double>{1.0, 2.0}), &sink);
  auto y = ad::sum(ad::square(p));
  g.backward(y);
  CHECK(sink[0] == doctest::Approx(2.0));
  CHECK(sink[1] == doctest::Approx(4.0));
  g.backward(y);
  CHECK(sink[1] == doctest::Approx(8.0));
  CHECK(g.grad(p)[1] == doctest::Approx(4.0));
  CHECK_THROWS_AS(g.backward(p), std::invalid_argument);
}

TEST_CASE("scalar loss seeds correctly") {
  ad::Graph<double> g;
  auto x = g.leaf(TensorD::scalar(3.0));
  g.backward(ad::square(x));
  CHECK(g.grad(x).item() == doctest::Approx(6.0));
}

TEST_CASE("constants take no gradient") {
  ad::Graph<double> g;
  auto c = g.constant(TensorD(Shape{3}, 1.0));
  auto x = g.leaf(TensorD(Shape{3}, 2.0));
  auto y = ad::sum(ad::mul(c, x));
  g.backward(y);
  CHECK_FALSE(c.requires_grad());
  CHECK(g.grad(x)[0] == doctest::Approx(1.0));
  auto d = ad::detach(x);
  CHECK_FALSE(d.requires_grad());
}

TEST_CASE("gradcheck: elementwise and reduction ops") {
  const Shape s{3, 4};
  CHECK(check_unary(s, [](const VarD& x) { return ad::square(x); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::sqrt(x); }, 2, 0.2, 2.0).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::exp(x); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::log(x); }, 3, 0.2, 2.0).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::gelu(x); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::leaky_relu(x, 0.2); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::softmax(x); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::layer_norm(x, 1e-5); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::scale(x, -2.5); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::add_scalar(x, 0.7); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::reshape(ad::sum(x), Shape{1}); }).max_rel_error < kGradTol);
  CHECK(check_unary(s, [](const VarD& x) { return ad::reshape(ad::mean(x), Shape{1}); }).max_rel_error < kGradTol);
}

TEST_CASE("gradcheck: binary ops with suffix broadcasting") {
  auto bin = [](const std::function<VarD(const VarD&, const VarD&)>& op, Shape sa, Shape sb) {
    return grad_check([&](ad::Graph<double>&, const Vars& v) { return weighted_sum(op(v[0], v[1])); },
                      {random_tensor(sa, 4), random_tensor(sb, 5)})
        .max_rel_error;
  };
  CHECK(bin([](const VarD& a, const VarD& b) { return ad::add(a, b); }, {2, 3}, {3}) < kGradTol);
  CHECK(bin([](const VarD& a, const VarD& b) { return ad::sub(a, b); }, {2, 3}, {2, 3}) < kGradTol);
  CHECK(bin([](const VarD& a, const VarD& b) { return ad::mul(a, b); }, {2, 3}, {3}) < kGradTol);
}

TEST_CASE("gradcheck: matmul variants") {
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      const Shape sa = ta ? Shape{4, 3} : Shape{3, 4};
      const Shape sb = tb ? Shape{5, 4} : Shape{4, 5};
      auto rep = grad_check(
          [&](ad::Graph<double>&, const Vars& v) { return weighted_sum(ad::matmul(v[0], v[1], ta, tb)); },
          {random_tensor(sa, 6), random_tensor(sb, 7)});
      CHECK(rep.max_rel_error < kGradTol);
    }
  }
  auto rep = grad_check(
      [](ad::Graph<double>&, const Vars& v) { return weighted_sum(ad::matmul(v[0], v[1], false, true)); },
      {random_tensor({2, 3, 4}, 8), random_tensor({2, 5, 4}, 9)});
  CHECK(rep.max_rel_error < kGradTol);
}

TEST_CASE("gradcheck: conv1d with stride, padding, dilation and groups") {
  struct Case {
    int cin, cout, k, len;
    ad::Conv1dOptions o;
  };
  for (const auto& c : {Case{2, 3, 3, 9, {1, 1, 1, 1}}, Case{2, 4, 5, 12, {2, 2, 1, 1}},
                        Case{3, 3, 3, 10, {1, 2, 2, 1}}, Case{4, 2, 3, 8, {1, 1, 1, 2}}}) {
    auto rep = grad_check(
        [&](ad::Graph<double>&, const Vars& v) {
          return weighted_sum(ad::conv1d(v[0], v[1], std::optional<VarD>(v[2]), c.o));
        },
        {random_tensor({c.cin, c.len}, 10), random_tensor({c.cout, c.cin / c.o.groups, c.k}, 11),
         random_tensor({c.cout}, 12)});
    CHECK(rep.max_rel_error < kGradTol);
  }
}

TEST_CASE("gradcheck: conv2d") {
  auto rep = grad_check(
      [](ad::Graph<double>&, const Vars& v) {
        return weighted_sum(ad::conv2d(v[0], v[1], std::optional<VarD>(v[2]), ad::Conv2dOptions{2, 1, 1, 1}));
      },
      {random_tensor({2, 6, 5}, 13), random_tensor({3, 2, 3, 3}, 14), random_tensor({3}, 15)});
  CHECK(rep.max_rel_error < kGradTol);
}

TEST_CASE("gradcheck: shape ops") {
  CHECK(check_unary({2, 3, 4}, [](const VarD& x) { return ad::transpose(x, {2, 0, 1}); }).max_rel_error < kGradTol);
  CHECK(check_unary({4, 5}, [](const VarD& x) { return ad::slice(x, 1, 1, 3); }).max_rel_error < kGradTol);
  CHECK(check_unary({2, 8}, [](const VarD& x) { return ad::avg_pool1d(x, 2); }).max_rel_error < kGradTol);
  CHECK(check_unary({2, 3}, [](const VarD& x) { return ad::repeat_columns(x, 3); }).max_rel_error < kGradTol);
  CHECK(check_unary({20}, [](const VarD& x) { return ad::frame(x, 8, 4); }).max_rel_error < kGradTol);
  CHECK(check_unary({6}, [](const VarD& x) {
          return ad::gather(x, {5, 0, -1, 0, 2}, Shape{5});
        }).max_rel_error < kGradTol);
  auto rep = grad_check(
      [](ad::Graph<double>&, const Vars& v) { return weighted_sum(ad::concat(Vars{v[0], v[1]}, 1)); },
      {random_tensor({2, 3}, 16), random_tensor({2, 2}, 17)});
  CHECK(rep.max_rel_error < kGradTol);
}

TEST_CASE("gradcheck: location-variable convolution") {
  for (int dilation : {1, 3}) {
    auto rep = grad_check(
        [&](ad::Graph<double>&, const Vars& v) {
          return weighted_sum(ad::location_variable_conv(v[0], v[1], v[2], 4, dilation));
        },
        {random_tensor({2, 12}, 18), random_tensor({3, 3, 2, 3}, 19), random_tensor({3, 3}, 20)});
    CHECK(rep.max_rel_error < kGradTol);
  }
}

TEST_CASE("location-variable convolution uses per-segment kernels") {
  ad::Graph<double> g;
  // one channel, identity kernel in segment 0, doubling kernel in segment 1
  TensorD k(Shape{2, 1, 1, 1}, std::vector<double>{1.0, 2.0});
  TensorD b(Shape{2, 1}, std::vector<double>{0.0, 0.5});
  auto x = g.constant(TensorD(Shape{1, 4}, std::vector<double>{1, 2, 3, 4}));
  auto y = ad::location_variable_conv(x, g.constant(k), g.constant(b), 2);
  CHECK(y.value() == TensorD(y.shape(), {1, 2, 6.5, 8.5}));
  CHECK_THROWS_AS(ad::location_variable_conv(x, g.constant(k), g.constant(b), 3), std::invalid_argument);
}

TEST_CASE("op error paths") {
  ad::Graph<double> g;
  auto a = g.constant(TensorD(Shape{2, 3}));
  auto b = g.constant(TensorD(Shape{4, 2}));
  CHECK_THROWS_AS(ad::matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ad::add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ad::avg_pool1d(a, 2), std::invalid_argument);
  CHECK_THROWS_AS(ad::reshape(a, Shape{5}), std::invalid_argument);
}

TEST_CASE("softmax rows sum to one") {
  ad::Graph<double> g;
  auto y = ad::softmax(g.constant(random_tensor({3, 7}, 21, -5, 5)));
  for (int r = 0; r < 3; ++r) {
    double s = 0;
    for (int c = 0; c < 7; ++c) s += y.value()[r * 7 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gradcheck detects a wrong gradient") {
  // d/dx of a function whose backward we deliberately misstate
  auto rep = grad_check(
      [](ad::Graph<double>& g, const Vars& v) {
        auto bad = g.record(ad::square(v[0]).value(), {v[0].id}, [src = v[0].id](ad::Graph<double>& gr, int self) {
          const auto& up = gr.node_grad(self);
          auto* dst = gr.grad_slot(src);
          for (std::int64_t i = 0; i < up.size(); ++i) (*dst)[i] += up[i];  // should be 2x * up
        });
        return ad::sum(bad);
      },
      {random_tensor({4}, 22, 1.0, 2.0)});
  CHECK(rep.max_rel_error > 0.1);
}

TEST_CASE("framing helpers") {
  CHECK(reflect_index(-1, 5) == 1);
  CHECK(reflect_index(5, 5) == 3);
  CHECK(reflect_index(2, 5) == 2);
  CHECK(num_frames(512, 256) == 2);
  CHECK(num_frames(513, 256) == 3);
  const auto idx = frame_indices(8, 4, 4);
  CHECK(idx.size() == 8);
  CHECK(idx[0] == 2);  // first frame starts at -2, reflected
  CHECK(idx[2] == 0);
}

TEST_CASE("key-value config parsing") {
  auto kv = parse_kv("# comment\n a = 1 \nb=two # trailing\n\nc = 0.5\n");
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "two");
  int a = 0;
  double c = 0;
  kv_get(kv, "a", a);
  kv_get(kv, "c", c);
  CHECK(a == 1);
  CHECK(c == 0.5);
  int missing = 7;
  kv_get(kv, "zzz", missing);
  CHECK(missing == 7);
  CHECK_THROWS_AS(kv_get(kv, "b", a), std::invalid_argument);
  CHECK_THROWS_AS(parse_kv("novalue\n"), std::invalid_argument);
  apply_override(kv, "a=5");
  CHECK(kv.at("a") == "5");
  CHECK_THROWS_AS(apply_override(kv, "nonsense"), std::invalid_argument);
  CHECK(parse_kv(format_kv(kv)) == kv);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "linvoc_ckpt_test";
  std::filesystem::create_directories(dir);
  ParamSet<float> ps;
  ps.add("a", TensorF(Shape{2, 2}, std::vector<float>{1, 2, 3, 4}));
  ps.add("b", TensorF(Shape{3}, std::vector<float>{-1, 0.5f, 7}));
  Checkpoint ck;
  store_params(ck, "m/", ps);
  ck.meta()["step"] = 12;
  ck.save(dir / "c.json");
  auto back = Checkpoint::load(dir / "c.json");
  CHECK(back.meta()["step"] == 12);
  ParamSet<float> other;
  other.add("a", TensorF(Shape{2, 2}));
  other.add("b", TensorF(Shape{3}));
  load_params(back, "m/", other);
  CHECK(other.at("a").value == ps.at("a").value);
  CHECK(other.at("b").value == ps.at("b").value);
  ParamSet<float> wrong;
  wrong.add("a", TensorF(Shape{4}));
  CHECK_THROWS(load_params(back, "m/", wrong));
  CHECK_THROWS(Checkpoint::load(dir / "missing.json"));
}
