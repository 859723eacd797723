// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "linvoc/framing.hpp"

namespace linvoc::ad {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;
template <typename T>
using CMapM = Eigen::Map<const Mat<T>>;
template <typename T>
using StridedMap = Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CStridedMap = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
void check_same_graph(const Var<T>& a, const Var<T>& b) {
  if (a.graph == nullptr || a.graph != b.graph) throw std::invalid_argument("operands belong to different graphs");
}

// Trailing-suffix broadcast of b onto a. Returns the length of one repeat of b.
template <typename T>
std::int64_t broadcast_inner(const Var<T>& a, const Var<T>& b, const char* op) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (b.size() == 1) return 1;
  if (sb.size() > sa.size()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  }
  for (std::size_t i = 0; i < sb.size(); ++i) {
    if (sa[sa.size() - sb.size() + i] != sb[i]) {
      throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(sa) + " vs " + shape_str(sb));
    }
  }
  return b.size();
}

template <typename T>
void reduce_into(const Tensor<T>& g, std::int64_t inner, Tensor<T>& out, T factor = T(1)) {
  const std::int64_t outer = g.size() / inner;
  T* o = out.data();
  const T* src = g.data();
  for (std::int64_t r = 0; r < outer; ++r) {
    for (std::int64_t i = 0; i < inner; ++i) o[i] += factor * src[r * inner + i];
  }
}

template <typename T, typename F, typename D>
Var<T> unary(const Var<T>& a, F forward, D derivative) {
  const Tensor<T>& x = a.value();
  Tensor<T> y(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
  const int ia = a.id;
  return a.graph->record(std::move(y), {ia}, [ia, derivative](Graph<T>& g, int self) {
    Tensor<T>* ga = g.grad_slot(ia);
    if (!ga) return;
    const Tensor<T>& gy = g.node_grad(self);
    const Tensor<T>& x = g.value(ia);
    const Tensor<T>& y = g.value(self);
    for (std::int64_t i = 0; i < x.size(); ++i) (*ga)[i] += gy[i] * derivative(x[i], y[i]);
  });
}

std::int64_t conv_out_len(std::int64_t len, int k, int stride, int pad, int dilation) {
  const std::int64_t span = static_cast<std::int64_t>(dilation) * (k - 1) + 1;
  const std::int64_t padded = len + 2 * pad;
  if (padded < span) return 0;
  return (padded - span) / stride + 1;
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_graph(a, b);
  const std::int64_t inner = broadcast_inner(a, b, "add");
  Tensor<T> y = a.value();
  const T* pb = b.value().data();
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] += pb[i % inner];
  const int ia = a.id, ib = b.id;
  return a.graph->record(std::move(y), {ia, ib}, [ia, ib, inner](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.node_grad(self);
    if (Tensor<T>* ga = g.grad_slot(ia)) {
      for (std::int64_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    }
    if (Tensor<T>* gb = g.grad_slot(ib)) reduce_into(gy, inner, *gb);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same_graph(a, b);
  const std::int64_t inner = broadcast_inner(a, b, "sub");
  Tensor<T> y = a.value();
  const T* pb = b.value().data();
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] -= pb[i % inner];
  const int ia = a.id, ib = b.id;
  return a.graph->record(std::move(y), {ia, ib}, [ia, ib, inner](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.node_grad(self);
    if (Tensor<T>* ga = g.grad_slot(ia)) {
      for (std::int64_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    }
    if (Tensor<T>* gb = g.grad_slot(ib)) reduce_into(gy, inner, *gb, T(-1));
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same_graph(a, b);
  const std::int64_t inner = broadcast_inner(a, b, "mul");
  Tensor<T> y = a.value();
  const T* pb = b.value().data();
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] *= pb[i % inner];
  const int ia = a.id, ib = b.id;
  return a.graph->record(std::move(y), {ia, ib}, [ia, ib, inner](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.node_grad(self);
    const Tensor<T>& va = g.value(ia);
    const Tensor<T>& vb = g.value(ib);
    if (Tensor<T>* ga = g.grad_slot(ia)) {
      for (std::int64_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * vb[i % inner];
    }
    if (Tensor<T>* gb = g.grad_slot(ib)) {
      for (std::int64_t i = 0; i < gy.size(); ++i) (*gb)[i % inner] += gy[i] * va[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  return unary<T>(a, [factor](T x) { return factor * x; }, [factor](T, T) { return factor; });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T offset) {
  return unary<T>(a, [offset](T x) { return x + offset; }, [](T, T) { return T(1); });
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b, bool trans_a, bool trans_b) {
  check_same_graph(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || (sa.size() != 2 && sa.size() != 3)) {
    throw std::invalid_argument("matmul: expected two rank-2 or two rank-3 operands, got " + shape_str(sa) +
                                " and " + shape_str(sb));
  }
  const bool batched = sa.size() == 3;
  const std::int64_t batch = batched ? sa[0] : 1;
  if (batched && sb[0] != batch) throw std::invalid_argument("matmul: batch mismatch");
  const std::int64_t ar = sa[sa.size() - 2], ac = sa[sa.size() - 1];
  const std::int64_t br = sb[sb.size() - 2], bc = sb[sb.size() - 1];
  const std::int64_t m = trans_a ? ac : ar, k = trans_a ? ar : ac;
  const std::int64_t kb = trans_b ? bc : br, n = trans_b ? br : bc;
  if (k != kb) {
    throw std::invalid_argument("matmul: inner dimension mismatch " + shape_str(sa) + " x " + shape_str(sb));
  }
  Shape so = batched ? Shape{batch, m, n} : Shape{m, n};
  Tensor<T> y(so);
  for (std::int64_t bi = 0; bi < batch; ++bi) {
    CMapM<T> A(a.value().data() + bi * ar * ac, ar, ac);
    CMapM<T> B(b.value().data() + bi * br * bc, br, bc);
    MapM<T> C(y.data() + bi * m * n, m, n);
    if (!trans_a && !trans_b) C.noalias() = A * B;
    else if (trans_a && !trans_b) C.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b) C.noalias() = A * B.transpose();
    else C.noalias() = A.transpose() * B.transpose();
  }
  const int ia = a.id, ib = b.id;
  return a.graph->record(std::move(y), {ia, ib},
                         [=](Graph<T>& g, int self) {
                           const Tensor<T>& gy = g.node_grad(self);
                           Tensor<T>* ga = g.grad_slot(ia);
                           Tensor<T>* gb = g.grad_slot(ib);
                           for (std::int64_t bi = 0; bi < batch; ++bi) {
                             CMapM<T> A(g.value(ia).data() + bi * ar * ac, ar, ac);
                             CMapM<T> B(g.value(ib).data() + bi * br * bc, br, bc);
                             CMapM<T> G(gy.data() + bi * m * n, m, n);
                             if (ga) {
                               MapM<T> GA(ga->data() + bi * ar * ac, ar, ac);
                               // C = A'B'; dA' = G B'^T
                               if (!trans_a && !trans_b) GA.noalias() += G * B.transpose();
                               else if (!trans_a && trans_b) GA.noalias() += G * B;
                               else if (trans_a && !trans_b) GA.noalias() += B * G.transpose();
                               else GA.noalias() += B.transpose() * G.transpose();
                             }
                             if (gb) {
                               MapM<T> GB(gb->data() + bi * br * bc, br, bc);
                               // dB' = A'^T G
                               if (!trans_a && !trans_b) GB.noalias() += A.transpose() * G;
                               else if (trans_a && !trans_b) GB.noalias() += A * G;
                               else if (!trans_a && trans_b) GB.noalias() += G.transpose() * A;
                               else GB.noalias() += G.transpose() * A.transpose();
                             }
                           }
                         });
}

namespace {

// cols [(cin_g*K), lout] for group `grp`.
template <typename T>
void im2col_1d(const T* x, std::int64_t len, std::int64_t cin_g, std::int64_t grp, int k, int stride, int pad,
               int dilation, std::int64_t lout, T* cols) {
  for (std::int64_t c = 0; c < cin_g; ++c) {
    const T* xc = x + (grp * cin_g + c) * len;
    for (int kk = 0; kk < k; ++kk) {
      T* row = cols + (c * k + kk) * lout;
      const std::int64_t offset = static_cast<std::int64_t>(kk) * dilation - pad;
      for (std::int64_t t = 0; t < lout; ++t) {
        const std::int64_t src = t * stride + offset;
        row[t] = (src >= 0 && src < len) ? xc[src] : T(0);
      }
    }
  }
}

template <typename T>
void col2im_1d(const T* cols, std::int64_t len, std::int64_t cin_g, std::int64_t grp, int k, int stride, int pad,
               int dilation, std::int64_t lout, T* gx) {
  for (std::int64_t c = 0; c < cin_g; ++c) {
    T* gc = gx + (grp * cin_g + c) * len;
    for (int kk = 0; kk < k; ++kk) {
      const T* row = cols + (c * k + kk) * lout;
      const std::int64_t offset = static_cast<std::int64_t>(kk) * dilation - pad;
      for (std::int64_t t = 0; t < lout; ++t) {
        const std::int64_t src = t * stride + offset;
        if (src >= 0 && src < len) gc[src] += row[t];
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv1d(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias, Conv1dOptions o) {
  check_same_graph(x, weight);
  const Shape& sx = x.shape();
  const Shape& sw = weight.shape();
  if (sx.size() != 2 || sw.size() != 3) {
    throw std::invalid_argument("conv1d: expected x [Cin, L] and weight [Cout, Cin/groups, K], got " +
                                shape_str(sx) + " and " + shape_str(sw));
  }
  if (o.stride < 1 || o.dilation < 1 || o.groups < 1 || o.padding < 0) {
    throw std::invalid_argument("conv1d: invalid stride/dilation/groups/padding");
  }
  const std::int64_t cin = sx[0], len = sx[1], cout = sw[0], k = sw[2];
  if (cin % o.groups != 0 || cout % o.groups != 0 || sw[1] != cin / o.groups) {
    throw std::invalid_argument("conv1d: channel/group mismatch " + shape_str(sx) + " vs " + shape_str(sw));
  }
  if (bias) {
    check_same_graph(x, *bias);
    if (bias->shape() != Shape{cout}) throw std::invalid_argument("conv1d: bias must be [Cout]");
  }
  const std::int64_t lout = conv_out_len(len, static_cast<int>(k), o.stride, o.padding, o.dilation);
  if (lout <= 0) throw std::invalid_argument("conv1d: input too short for kernel");
  const std::int64_t cin_g = cin / o.groups, cout_g = cout / o.groups;
  const std::int64_t kdim = cin_g * k;

  Tensor<T> y(Shape{cout, lout});
  std::vector<T> cols(static_cast<std::size_t>(kdim * lout));
  for (int grp = 0; grp < o.groups; ++grp) {
    im2col_1d(x.value().data(), len, cin_g, grp, static_cast<int>(k), o.stride, o.padding, o.dilation, lout,
              cols.data());
    CMapM<T> W(weight.value().data() + grp * cout_g * kdim, cout_g, kdim);
    CMapM<T> C(cols.data(), kdim, lout);
    MapM<T> Y(y.data() + grp * cout_g * lout, cout_g, lout);
    Y.noalias() = W * C;
  }
  if (bias) {
    const T* pb = bias->value().data();
    for (std::int64_t c = 0; c < cout; ++c) {
      T* row = y.data() + c * lout;
      for (std::int64_t t = 0; t < lout; ++t) row[t] += pb[c];
    }
  }
  std::vector<int> parents{x.id, weight.id};
  const int ib = bias ? bias->id : -1;
  if (bias) parents.push_back(ib);
  const int ix = x.id, iw = weight.id;
  return x.graph->record(std::move(y), parents, [=](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.node_grad(self);
    Tensor<T>* gx = g.grad_slot(ix);
    Tensor<T>* gw = g.grad_slot(iw);
    std::vector<T> cols(static_cast<std::size_t>(kdim * lout));
    std::vector<T> gcols(gx ? static_cast<std::size_t>(kdim * lout) : 0);
    for (int grp = 0; grp < o.groups; ++grp) {
      CMapM<T> G(gy.data() + grp * cout_g * lout, cout_g, lout);
      if (gw) {
        im2col_1d(g.value(ix).data(), len, cin_g, grp, static_cast<int>(k), o.stride, o.padding, o.dilation, lout,
                  cols.data());
        CMapM<T> C(cols.data(), kdim, lout);
        MapM<T> GW(gw->data() + grp * cout_g * kdim, cout_g, kdim);
        GW.noalias() += G * C.transpose();
      }
      if (gx) {
        CMapM<T> W(g.value(iw).data() + grp * cout_g * kdim, cout_g, kdim);
        MapM<T> GC(gcols.data(), kdim, lout);
        GC.noalias() = W.transpose() * G;
        col2im_1d(gcols.data(), len, cin_g, grp, static_cast<int>(k), o.stride, o.padding, o.dilation, lout,
                  gx->data());
      }
    }
    if (ib >= 0) {
      if (Tensor<T>* gb = g.grad_slot(ib)) {
        for (std::int64_t c = 0; c < cout; ++c) {
          const T* row = gy.data() + c * lout;
          T acc = T(0);
          for (std::int64_t t = 0; t < lout; ++t) acc += row[t];
          (*gb)[c] += acc;
        }
      }
    }
  });
}

namespace {

struct Conv2dGeom {
  std::int64_t cin, h, w, kh, kw, hout, wout;
  Conv2dOptions o;
};

template <typename T>
void im2col_2d(const T* x, const Conv2dGeom& g, T* cols) {
  const std::int64_t n = g.hout * g.wout;
  for (std::int64_t c = 0; c < g.cin; ++c) {
    for (std::int64_t a = 0; a < g.kh; ++a) {
      for (std::int64_t b = 0; b < g.kw; ++b) {
        T* row = cols + ((c * g.kh + a) * g.kw + b) * n;
        for (std::int64_t i = 0; i < g.hout; ++i) {
          const std::int64_t si = i * g.o.stride_h - g.o.pad_h + a;
          for (std::int64_t j = 0; j < g.wout; ++j) {
            const std::int64_t sj = j * g.o.stride_w - g.o.pad_w + b;
            row[i * g.wout + j] =
                (si >= 0 && si < g.h && sj >= 0 && sj < g.w) ? x[(c * g.h + si) * g.w + sj] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_2d(const T* cols, const Conv2dGeom& g, T* gx) {
  const std::int64_t n = g.hout * g.wout;
  for (std::int64_t c = 0; c < g.cin; ++c) {
    for (std::int64_t a = 0; a < g.kh; ++a) {
      for (std::int64_t b = 0; b < g.kw; ++b) {
        const T* row = cols + ((c * g.kh + a) * g.kw + b) * n;
        for (std::int64_t i = 0; i < g.hout; ++i) {
          const std::int64_t si = i * g.o.stride_h - g.o.pad_h + a;
          if (si < 0 || si >= g.h) continue;
          for (std::int64_t j = 0; j < g.wout; ++j) {
            const std::int64_t sj = j * g.o.stride_w - g.o.pad_w + b;
            if (sj >= 0 && sj < g.w) gx[(c * g.h + si) * g.w + sj] += row[i * g.wout + j];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias, Conv2dOptions o) {
  check_same_graph(x, weight);
  const Shape& sx = x.shape();
  const Shape& sw = weight.shape();
  if (sx.size() != 3 || sw.size() != 4 || sw[1] != sx[0]) {
    throw std::invalid_argument("conv2d: expected x [Cin, H, W] and weight [Cout, Cin, KH, KW], got " +
                                shape_str(sx) + " and " + shape_str(sw));
  }
  if (o.stride_h < 1 || o.stride_w < 1 || o.pad_h < 0 || o.pad_w < 0) {
    throw std::invalid_argument("conv2d: invalid stride/padding");
  }
  const std::int64_t cout = sw[0];
  if (bias) {
    check_same_graph(x, *bias);
    if (bias->shape() != Shape{cout}) throw std::invalid_argument("conv2d: bias must be [Cout]");
  }
  Conv2dGeom geom{sx[0], sx[1], sx[2], sw[2], sw[3], 0, 0, o};
  geom.hout = conv_out_len(geom.h, static_cast<int>(geom.kh), o.stride_h, o.pad_h, 1);
  geom.wout = conv_out_len(geom.w, static_cast<int>(geom.kw), o.stride_w, o.pad_w, 1);
  if (geom.hout <= 0 || geom.wout <= 0) throw std::invalid_argument("conv2d: input too small for kernel");
  const std::int64_t kdim = geom.cin * geom.kh * geom.kw;
  const std::int64_t n = geom.hout * geom.wout;

  Tensor<T> y(Shape{cout, geom.hout, geom.wout});
  std::vector<T> cols(static_cast<std::size_t>(kdim * n));
  im2col_2d(x.value().data(), geom, cols.data());
  {
    CMapM<T> W(weight.value().data(), cout, kdim);
    CMapM<T> C(cols.data(), kdim, n);
    MapM<T> Y(y.data(), cout, n);
    Y.noalias() = W * C;
  }
  if (bias) {
    const T* pb = bias->value().data();
    for (std::int64_t c = 0; c < cout; ++c) {
      for (std::int64_t t = 0; t < n; ++t) y[c * n + t] += pb[c];
    }
  }
  std::vector<int> parents{x.id, weight.id};
  const int ib = bias ? bias->id : -1;
  if (bias) parents.push_back(ib);
  const int ix = x.id, iw = weight.id;
  return x.graph->record(std::move(y), parents, [=](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.node_grad(self);
    CMapM<T> G(gy.data(), cout, n);
    if (Tensor<T>* gw = g.grad_slot(iw)) {
      std::vector<T> cols(static_cast<std::size_t>(kdim * n));
      im2col_2d(g.value(ix).data(), geom, cols.data());
      CMapM<T> C(cols.data(), kdim, n);
      MapM<T> GW(gw->data(), cout, kdim);
      GW.noalias() += G * C.transpose();
    }
    if (Tensor<T>* gx = g.grad_slot(ix)) {
      std::vector<T> gcols(static_cast<std::size_t>(kdim * n));
      CMapM<T> W(g.value(iw).data(), cout, kdim);
      MapM<T> GC(gcols.data(), kdim, n);
      GC.noalias() = W.transpose() * G;
      col2im_2d(gcols.data(), geom, gx->data());
    }
    if (ib >= 0) {
      if (Tensor<T>* gb = g.grad_slot(ib)) {
        for (std::int64_t c = 0; c < cout; ++c) {
          T acc = T(0);
          for (std::int64_t t = 0; t < n; ++t) acc += gy[c * n + t];
          (*gb)[c] += acc;
        }
      }
    }
  });
}

namespace {

// Flat index map of a permutation: out.flat[i] = in.flat[map[i]].
std::vector<std::int64_t> permutation_map(const Shape& in, const std::vector<int>& perm, Shape& out_shape) {
  const std::size_t r = in.size();
  if (perm.size() != r) throw std::invalid_argument("transpose: permutation rank mismatch");
  std::vector<bool> seen(r, false);
  out_shape.assign(r, 0);
  for (std::size_t i = 0; i < r; ++i) {
    if (perm[i] < 0 || static_cast<std::size_t>(perm[i]) >= r || seen[static_cast<std::size_t>(perm[i])]) {
      throw std::invalid_argument("transpose: invalid permutation");
    }
    seen[static_cast<std::size_t>(perm[i])] = true;
    out_shape[i] = in[static_cast<std::size_t>(perm[i])];
  }
  std::vector<std::int64_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  std::vector<std::int64_t> step(r);
  for (std::size_t i = 0; i < r; ++i) step[i] = in_stride[static_cast<std::size_t>(perm[i])];
  const std::int64_t total = numel(in);
  std::vector<std::int64_t> map(static_cast<std::size_t>(total));
  std::vector<std::int64_t> counter(r, 0);
  std::int64_t src = 0;
  for (std::int64_t i = 0; i < total; ++i) {
    map[static_cast<std::size_t>(i)] = src;
    for (std::size_t d = r; d-- > 0;) {
      if (++counter[d] < out_shape[d]) {
        src += step[d];
        break;
      }
      src -= step[d] * (out_shape[d] - 1);
      counter[d] = 0;
    }
  }
  return map;
}

}  // namespace

template <typename T>
Var<T> gather(const Var<T>& a, std::vector<std::int64_t> index, Shape out_shape) {
  if (numel(out_shape) != static_cast<std::int64_t>(index.size())) {
    throw std::invalid_argument("gather: index count does not match output shape " + shape_str(out_shape));
  }
  const std::int64_t n_in = a.size();
  for (auto i : index) {
    if (i >= n_in) throw std::out_of_range("gather: index out of range");
  }
  Tensor<T> y(std::move(out_shape));
  const T* src = a.value().data();
  for (std::size_t i = 0; i < index.size(); ++i) y[static_cast<std::int64_t>(i)] = index[i] < 0 ? T(0) : src[index[i]];
  auto shared = std::make_shared<const std::vector<std::int64_t>>(std::move(index));
  const int ia = a.id;
  return a.graph->record(std::move(y), {ia}, [ia, shared](Graph<T>& g, int self) {
    Tensor<T>* ga = g.grad_slot(ia);
    if (!ga) return;
    const Tensor<T>& gy = g.node_grad(self);
    const auto& idx = *shared;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= 0) (*ga)[idx[i]] += gy[static_cast<std::int64_t>(i)];
    }
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a, const std::vector<int>& perm) {
  Shape out_shape;
  auto map = permutation_map(a.shape(), perm, out_shape);
  return gather(a, std::move(map), std::move(out_shape));
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> y = a.value().reshaped(std::move(shape));
  const int ia = a.id;
  return a.graph->record(std::move(y), {ia}, [ia](Graph<T>& g, int self) {
    Tensor<T>* ga = g.grad_slot(ia);
    if (!ga) return;
    const Tensor<T>& gy = g.node_grad(self);
    for (std::int64_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
  });
}

template <typename T>
Var<T> slice(const Var<T>& a, int axis, std::int64_t start, std::int64_t length) {
  const Shape& s = a.shape();
  const int r = static_cast<int>(s.size());
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw std::invalid_argument("slice: bad axis");
  if (start < 0 || length < 0 || start + length > s[static_cast<std::size_t>(axis)]) {
    throw std::out_of_range("slice: range outside dimension");
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < r; ++i) inner *= s[static_cast<std::size_t>(i)];
  const std::int64_t dim = s[static_cast<std::size_t>(axis)];
  Shape so = s;
  so[static_cast<std::size_t>(axis)] = length;
  std::vector<std::int64_t> idx;
  idx.reserve(static_cast<std::size_t>(outer * length * inner));
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t j = 0; j < length; ++j) {
      for (std::int64_t i = 0; i < inner; ++i) idx.push_back((o * dim + start + j) * inner + i);
    }
  }
  return gather(a, std::move(idx), std::move(so));
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no operands");
  const Shape& s0 = parts[0].shape();
  const int r = static_cast<int>(s0.size());
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw std::invalid_argument("concat: bad axis");
  std::int64_t total = 0;
  for (const auto& p : parts) {
    check_same_graph(parts[0], p);
    const Shape& s = p.shape();
    if (static_cast<int>(s.size()) != r) throw std::invalid_argument("concat: rank mismatch");
    for (int i = 0; i < r; ++i) {
      if (i != axis && s[static_cast<std::size_t>(i)] != s0[static_cast<std::size_t>(i)]) {
        throw std::invalid_argument("concat: shape mismatch " + shape_str(s0) + " vs " + shape_str(s));
      }
    }
    total += s[static_cast<std::size_t>(axis)];
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s0[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < r; ++i) inner *= s0[static_cast<std::size_t>(i)];
  Shape so = s0;
  so[static_cast<std::size_t>(axis)] = total;
  Tensor<T> y(so);
  std::vector<int> ids;
  std::vector<std::int64_t> dims;
  for (const auto& p : parts) {
    ids.push_back(p.id);
    dims.push_back(p.shape()[static_cast<std::size_t>(axis)]);
  }
  {
    std::int64_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const T* src = parts[k].value().data();
      for (std::int64_t o = 0; o < outer; ++o) {
        std::copy(src + o * dims[k] * inner, src + (o + 1) * dims[k] * inner,
                  y.data() + (o * total + offset) * inner);
      }
      offset += dims[k];
    }
  }
  return parts[0].graph->record(std::move(y), ids, [ids, dims, outer, inner, total](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.node_grad(self);
    std::int64_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (Tensor<T>* gp = g.grad_slot(ids[k])) {
        for (std::int64_t o = 0; o < outer; ++o) {
          const T* src = gy.data() + (o * total + offset) * inner;
          T* dst = gp->data() + o * dims[k] * inner;
          for (std::int64_t i = 0; i < dims[k] * inner; ++i) dst[i] += src[i];
        }
      }
      offset += dims[k];
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  if (a.size() == 0) throw std::invalid_argument("sum: zero-size reduction");
  T acc = T(0);
  for (T v : a.value().values()) acc += v;
  const int ia = a.id;
  return a.graph->record(Tensor<T>::scalar(acc), {ia}, [ia](Graph<T>& g, int self) {
    Tensor<T>* ga = g.grad_slot(ia);
    if (!ga) return;
    const T gy = g.node_grad(self)[0];
    for (std::int64_t i = 0; i < ga->size(); ++i) (*ga)[i] += gy;
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  if (a.size() == 0) throw std::invalid_argument("mean: zero-size reduction");
  const T inv = T(1) / static_cast<T>(a.size());
  T acc = T(0);
  for (T v : a.value().values()) acc += v;
  const int ia = a.id;
  return a.graph->record(Tensor<T>::scalar(acc * inv), {ia}, [ia, inv](Graph<T>& g, int self) {
    Tensor<T>* ga = g.grad_slot(ia);
    if (!ga) return;
    const T gy = g.node_grad(self)[0] * inv;
    for (std::int64_t i = 0; i < ga->size(); ++i) (*ga)[i] += gy;
  });
}

template <typename T>
Var<T> square(const Var<T>& a) {
  return unary<T>(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Var<T> sqrt(const Var<T>& a) {
  return unary<T>(a, [](T x) { return std::sqrt(x); }, [](T, T y) { return y > T(0) ? T(0.5) / y : T(0); });
}

template <typename T>
Var<T> exp(const Var<T>& a) {
  return unary<T>(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> log(const Var<T>& a) {
  return unary<T>(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Var<T> gelu(const Var<T>& a) {
  constexpr T inv_sqrt2 = T(0.70710678118654752440);
  constexpr T inv_sqrt_2pi = T(0.39894228040143267794);
  return unary<T>(
      a, [](T x) { return T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2)); },
      [](T x, T) { return T(0.5) * (T(1) + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(T(-0.5) * x * x); });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
  return unary<T>(
      a, [slope](T x) { return x >= T(0) ? x : slope * x; }, [slope](T x, T) { return x >= T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> softmax(const Var<T>& a) {
  const Tensor<T>& x = a.value();
  if (x.rank() == 0 || x.size() == 0) throw std::invalid_argument("softmax: zero-size input");
  const std::int64_t n = x.shape().back();
  const std::int64_t rows = x.size() / n;
  Tensor<T> y(x.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xi = x.data() + r * n;
    T* yi = y.data() + r * n;
    T mx = xi[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
    T z = T(0);
    for (std::int64_t j = 0; j < n; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      z += yi[j];
    }
    for (std::int64_t j = 0; j < n; ++j) yi[j] /= z;
  }
  const int ia = a.id;
  return a.graph->record(std::move(y), {ia}, [ia, n, rows](Graph<T>& g, int self) {
    Tensor<T>* ga = g.grad_slot(ia);
    if (!ga) return;
    const Tensor<T>& gy = g.node_grad(self);
    const Tensor<T>& y = g.value(self);
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* yi = y.data() + r * n;
      const T* gi = gy.data() + r * n;
      T dot = T(0);
      for (std::int64_t j = 0; j < n; ++j) dot += yi[j] * gi[j];
      T* out = ga->data() + r * n;
      for (std::int64_t j = 0; j < n; ++j) out[j] += yi[j] * (gi[j] - dot);
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& a, T eps) {
  const Tensor<T>& x = a.value();
  if (x.rank() == 0 || x.size() == 0) throw std::invalid_argument("layer_norm: zero-size input");
  const std::int64_t n = x.shape().back();
  const std::int64_t rows = x.size() / n;
  Tensor<T> y(x.shape());
  auto rstd = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xi = x.data() + r * n;
    T mu = T(0);
    for (std::int64_t j = 0; j < n; ++j) mu += xi[j];
    mu /= static_cast<T>(n);
    T var = T(0);
    for (std::int64_t j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<T>(n);
    const T rs = T(1) / std::sqrt(var + eps);
    (*rstd)[static_cast<std::size_t>(r)] = rs;
    T* yi = y.data() + r * n;
    for (std::int64_t j = 0; j < n; ++j) yi[j] = (xi[j] - mu) * rs;
  }
  const int ia = a.id;
  return a.graph->record(std::move(y), {ia}, [ia, n, rows, rstd](Graph<T>& g, int self) {
    Tensor<T>* ga = g.grad_slot(ia);
    if (!ga) return;
    const Tensor<T>& gy = g.node_grad(self);
    const Tensor<T>& y = g.value(self);
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* yi = y.data() + r * n;
      const T* gi = gy.data() + r * n;
      T mg = T(0), mgy = T(0);
      for (std::int64_t j = 0; j < n; ++j) {
        mg += gi[j];
        mgy += gi[j] * yi[j];
      }
      mg /= static_cast<T>(n);
      mgy /= static_cast<T>(n);
      const T rs = (*rstd)[static_cast<std::size_t>(r)];
      T* out = ga->data() + r * n;
      for (std::int64_t j = 0; j < n; ++j) out[j] += rs * (gi[j] - mg - yi[j] * mgy);
    }
  });
}

template <typename T>
Var<T> avg_pool1d(const Var<T>& x, int k) {
  const Shape& s = x.shape();
  if (s.size() != 2) throw std::invalid_argument("avg_pool1d: expected [C, L], got " + shape_str(s));
  if (k < 1 || s[1] % k != 0) throw std::invalid_argument("avg_pool1d: length not divisible by window");
  if (k == 1) return reshape(x, s);
  const std::int64_t c = s[0], lout = s[1] / k;
  Tensor<T> y(Shape{c, lout});
  const T inv = T(1) / static_cast<T>(k);
  for (std::int64_t i = 0; i < c * lout; ++i) {
    T acc = T(0);
    for (int j = 0; j < k; ++j) acc += x.value()[i * k + j];
    y[i] = acc * inv;
  }
  const int ix = x.id;
  return x.graph->record(std::move(y), {ix}, [ix, k, inv](Graph<T>& g, int self) {
    Tensor<T>* gx = g.grad_slot(ix);
    if (!gx) return;
    const Tensor<T>& gy = g.node_grad(self);
    for (std::int64_t i = 0; i < gy.size(); ++i) {
      for (int j = 0; j < k; ++j) (*gx)[i * k + j] += gy[i] * inv;
    }
  });
}

template <typename T>
Var<T> detach(const Var<T>& a) {
  return a.graph->constant(a.value());
}

namespace {

template <typename T>
void lvc_cols(const T* x, std::int64_t cin, std::int64_t len, std::int64_t seg, int hop, int k, int dilation,
              T* cols) {
  const int half = (k - 1) / 2;
  for (std::int64_t c = 0; c < cin; ++c) {
    for (int kk = 0; kk < k; ++kk) {
      T* row = cols + (c * k + kk) * hop;
      const std::int64_t offset = seg * hop + static_cast<std::int64_t>(kk - half) * dilation;
      for (int t = 0; t < hop; ++t) {
        const std::int64_t src = offset + t;
        row[t] = (src >= 0 && src < len) ? x[c * len + src] : T(0);
      }
    }
  }
}

template <typename T>
void lvc_cols_back(const T* cols, std::int64_t cin, std::int64_t len, std::int64_t seg, int hop, int k,
                   int dilation, T* gx) {
  const int half = (k - 1) / 2;
  for (std::int64_t c = 0; c < cin; ++c) {
    for (int kk = 0; kk < k; ++kk) {
      const T* row = cols + (c * k + kk) * hop;
      const std::int64_t offset = seg * hop + static_cast<std::int64_t>(kk - half) * dilation;
      for (int t = 0; t < hop; ++t) {
        const std::int64_t src = offset + t;
        if (src >= 0 && src < len) gx[c * len + src] += row[t];
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> location_variable_conv(const Var<T>& x, const Var<T>& kernels, const Var<T>& bias, int hop, int dilation) {
  check_same_graph(x, kernels);
  check_same_graph(x, bias);
  const Shape& sx = x.shape();
  const Shape& sk = kernels.shape();
  if (sx.size() != 2 || sk.size() != 4) {
    throw std::invalid_argument("location_variable_conv: expected x [Cin, L] and kernels [S, Cout, Cin, K]");
  }
  if (hop < 1 || dilation < 1) throw std::invalid_argument("location_variable_conv: bad hop/dilation");
  const std::int64_t cin = sx[0], len = sx[1], segs = sk[0], cout = sk[1], k = sk[3];
  if (sk[2] != cin || k % 2 == 0) throw std::invalid_argument("location_variable_conv: kernel shape mismatch");
  if (len != segs * hop) {
    throw std::invalid_argument("location_variable_conv: length " + std::to_string(len) + " != segments " +
                                std::to_string(segs) + " x hop " + std::to_string(hop));
  }
  if (bias.shape() != Shape{segs, cout}) throw std::invalid_argument("location_variable_conv: bias must be [S, Cout]");
  const std::int64_t kdim = cin * k;
  Tensor<T> y(Shape{cout, len});
  std::vector<T> cols(static_cast<std::size_t>(kdim * hop));
  for (std::int64_t s = 0; s < segs; ++s) {
    lvc_cols(x.value().data(), cin, len, s, hop, static_cast<int>(k), dilation, cols.data());
    CMapM<T> K(kernels.value().data() + s * cout * kdim, cout, kdim);
    CMapM<T> C(cols.data(), kdim, hop);
    StridedMap<T> Y(y.data() + s * hop, cout, hop, Eigen::OuterStride<>(len));
    Y.noalias() = K * C;
    const T* b = bias.value().data() + s * cout;
    for (std::int64_t o = 0; o < cout; ++o) Y.row(o).array() += b[o];
  }
  const int ix = x.id, ik = kernels.id, ib = bias.id;
  return x.graph->record(std::move(y), {ix, ik, ib}, [=](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.node_grad(self);
    Tensor<T>* gx = g.grad_slot(ix);
    Tensor<T>* gk = g.grad_slot(ik);
    Tensor<T>* gb = g.grad_slot(ib);
    std::vector<T> cols(static_cast<std::size_t>(kdim * hop));
    for (std::int64_t s = 0; s < segs; ++s) {
      CStridedMap<T> G(gy.data() + s * hop, cout, hop, Eigen::OuterStride<>(len));
      if (gk) {
        lvc_cols(g.value(ix).data(), cin, len, s, hop, static_cast<int>(k), dilation, cols.data());
        CMapM<T> C(cols.data(), kdim, hop);
        MapM<T> GK(gk->data() + s * cout * kdim, cout, kdim);
        GK.noalias() += G * C.transpose();
      }
      if (gx) {
        CMapM<T> K(g.value(ik).data() + s * cout * kdim, cout, kdim);
        MapM<T> GC(cols.data(), kdim, hop);
        GC.noalias() = K.transpose() * G;
        lvc_cols_back(cols.data(), cin, len, s, hop, static_cast<int>(k), dilation, gx->data());
      }
      if (gb) {
        for (std::int64_t o = 0; o < cout; ++o) (*gb)[s * cout + o] += G.row(o).sum();
      }
    }
  });
}

template <typename T>
Var<T> frame(const Var<T>& x, int n_fft, int hop) {
  if (x.shape().size() != 1) throw std::invalid_argument("frame: expected a 1-D signal");
  const std::int64_t len = x.shape()[0];
  auto idx = frame_indices(len, n_fft, hop);
  return gather(x, std::move(idx), Shape{num_frames(len, hop), n_fft});
}

template <typename T>
Var<T> repeat_columns(const Var<T>& x, int factor) {
  const Shape& s = x.shape();
  if (s.size() != 2 || factor < 1) throw std::invalid_argument("repeat_columns: expected [C, F] and factor >= 1");
  const std::int64_t c = s[0], f = s[1];
  std::vector<std::int64_t> idx(static_cast<std::size_t>(c * f * factor));
  for (std::int64_t i = 0; i < c; ++i) {
    for (std::int64_t j = 0; j < f * factor; ++j) idx[static_cast<std::size_t>(i * f * factor + j)] = i * f + j / factor;
  }
  return gather(x, std::move(idx), Shape{c, f * factor});
}

#define LINVOC_INSTANTIATE_OPS(T)                                                                              \
  template Var<T> add(const Var<T>&, const Var<T>&);                                                          \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                                          \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                                          \
  template Var<T> scale(const Var<T>&, T);                                                                    \
  template Var<T> add_scalar(const Var<T>&, T);                                                               \
  template Var<T> matmul(const Var<T>&, const Var<T>&, bool, bool);                                           \
  template Var<T> conv1d(const Var<T>&, const Var<T>&, const std::optional<Var<T>>&, Conv1dOptions);          \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const std::optional<Var<T>>&, Conv2dOptions);          \
  template Var<T> transpose(const Var<T>&, const std::vector<int>&);                                          \
  template Var<T> reshape(const Var<T>&, Shape);                                                              \
  template Var<T> slice(const Var<T>&, int, std::int64_t, std::int64_t);                                      \
  template Var<T> concat(const std::vector<Var<T>>&, int);                                                    \
  template Var<T> sum(const Var<T>&);                                                                         \
  template Var<T> mean(const Var<T>&);                                                                        \
  template Var<T> square(const Var<T>&);                                                                      \
  template Var<T> sqrt(const Var<T>&);                                                                        \
  template Var<T> exp(const Var<T>&);                                                                         \
  template Var<T> log(const Var<T>&);                                                                         \
  template Var<T> softmax(const Var<T>&);                                                                     \
  template Var<T> gelu(const Var<T>&);                                                                        \
  template Var<T> leaky_relu(const Var<T>&, T);                                                               \
  template Var<T> layer_norm(const Var<T>&, T);                                                               \
  template Var<T> avg_pool1d(const Var<T>&, int);                                                             \
  template Var<T> gather(const Var<T>&, std::vector<std::int64_t>, Shape);                                    \
  template Var<T> detach(const Var<T>&);                                                                      \
  template Var<T> location_variable_conv(const Var<T>&, const Var<T>&, const Var<T>&, int, int);              \
  template Var<T> frame(const Var<T>&, int, int);                                                             \
  template Var<T> repeat_columns(const Var<T>&, int);

LINVOC_INSTANTIATE_OPS(float)
LINVOC_INSTANTIATE_OPS(double)

}  // namespace linvoc::ad
