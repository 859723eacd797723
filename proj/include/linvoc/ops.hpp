// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// The fixed differentiable op set. Every op returns a new node of the operand
// graph and registers its vector-Jacobian product.
//
// Broadcasting is limited to one rule: in add/sub/mul the second operand may
// have a shape equal to a trailing suffix of the first (or be a single value).

#pragma once

#include <optional>
#include <vector>

#include "linvoc/graph.hpp"

namespace linvoc::ad {

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);
template <typename T> Var<T> add_scalar(const Var<T>& a, T offset);

/// Rank-2 [M,K]x[K,N] or batched rank-3 [B,M,K]x[B,K,N]; operands may be
/// transposed on their last two axes.
template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b, bool trans_a = false, bool trans_b = false);

struct Conv1dOptions {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  int groups = 1;
};

/// x [Cin, L], weight [Cout, Cin/groups, K], bias [Cout] -> [Cout, Lout]. Zero padding.
template <typename T>
Var<T> conv1d(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias,
              Conv1dOptions opts = {});

struct Conv2dOptions {
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
};

/// x [Cin, H, W], weight [Cout, Cin, KH, KW], bias [Cout] -> [Cout, Hout, Wout].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias,
              Conv2dOptions opts = {});

template <typename T> Var<T> transpose(const Var<T>& a, const std::vector<int>& perm);
template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);
template <typename T> Var<T> slice(const Var<T>& a, int axis, std::int64_t start, std::int64_t length);
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, int axis);

template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);

template <typename T> Var<T> square(const Var<T>& a);
/// Subgradient 0 at exactly 0.
template <typename T> Var<T> sqrt(const Var<T>& a);
template <typename T> Var<T> exp(const Var<T>& a);
template <typename T> Var<T> log(const Var<T>& a);
/// Along the last axis.
template <typename T> Var<T> softmax(const Var<T>& a);
/// Exact (erf) form.
template <typename T> Var<T> gelu(const Var<T>& a);
template <typename T> Var<T> leaky_relu(const Var<T>& a, T slope = T(0.2));
/// Normalises over the last axis, no affine part.
template <typename T> Var<T> layer_norm(const Var<T>& a, T eps = T(1e-5));
/// x [C, L] -> [C, L/k], window and stride k; L must be divisible by k.
template <typename T> Var<T> avg_pool1d(const Var<T>& x, int k);

/// out.flat[i] = a.flat[index[i]], or 0 where index[i] < 0. Backward is a
/// scatter-add. Framing, padding and nearest upsampling are built on it.
template <typename T>
Var<T> gather(const Var<T>& a, std::vector<std::int64_t> index, Shape out_shape);

/// Same values, no gradient flow.
template <typename T> Var<T> detach(const Var<T>& a);

/// Location-variable convolution. x [Cin, L] is split into S = L/hop
/// segments; output position t in segment s uses kernels[s] ([Cout, Cin, K])
/// and bias[s] ([Cout]). The receptive field crosses segment borders; the
/// signal ends are zero padded.
template <typename T>
Var<T> location_variable_conv(const Var<T>& x, const Var<T>& kernels, const Var<T>& bias,
                              int hop, int dilation = 1);

// Composite helpers (no new backward rules).

/// Reflect-padded centred frames of a 1-D signal: [ceil(L/hop), n_fft].
template <typename T> Var<T> frame(const Var<T>& x, int n_fft, int hop);
/// x [C, F] -> [C, F*factor], each column repeated `factor` times.
template <typename T> Var<T> repeat_columns(const Var<T>& x, int factor);

}  // namespace linvoc::ad
