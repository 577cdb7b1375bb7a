// Copyright 2026 The vgsalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vgs/core/autograd.hpp"

// Differentiable primitives. Every op is defined for float (training) and
// double (verification). Batched layouts:
//   sequences  [B, T, C]
//   images     [B, C, H, W]

namespace vgs::core {

template <typename S> Var<S> add(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> mul(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> scale(const Var<S>& a, S factor);
template <typename S> Var<S> sum(const Var<S>& a);
/// Sums out `axis`, removing it from the shape.
template <typename S> Var<S> sum_axis(const Var<S>& a, std::size_t axis);

/// y = x W^T + b over the last axis of x. `bias` may be undefined.
template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& weight, const Var<S>& bias);

/// [P, N] x [Q, N] -> [P, Q], out[p][q] = a_p . b_q
template <typename S> Var<S> matmul_nt(const Var<S>& a, const Var<S>& b);

/// Valid cross-correlation along time. x [B, T, Cin], weight [Cout, Cin, k],
/// bias [Cout] -> [B, T', Cout] with T' = (T - k) / stride + 1.
template <typename S>
Var<S> conv1d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias,
              std::size_t stride);

/// Output length of conv1d for an input of `length` steps.
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel,
                                 std::size_t stride);

/// Bias-free 2-D cross-correlation with zero padding.
/// x [B, Cin, H, W], weight [Cout, Cin, k, k].
template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& weight, std::size_t stride,
              std::size_t padding);

enum class BatchNormMode { kTrain, kEval };

/// Per-channel batch normalization over [B, C, H, W]. In train mode the
/// running statistics are updated in place (unbiased variance).
template <typename S>
Var<S> batchnorm2d(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta,
                   Tensor<S>& running_mean, Tensor<S>& running_var,
                   BatchNormMode mode, S eps = S(1e-5), S momentum = S(0.1));

template <typename S> Var<S> relu(const Var<S>& x);
template <typename S> Var<S> tanh_op(const Var<S>& x);
template <typename S> Var<S> sigmoid(const Var<S>& x);

/// Numerically stable softmax along `axis`.
template <typename S> Var<S> softmax(const Var<S>& x, std::size_t axis);

/// Softmax over the time axis of x [B, T, N], independently per batch row and
/// feature. Steps t >= lengths[b] receive zero weight.
template <typename S>
Var<S> masked_time_softmax(const Var<S>& x,
                           std::span<const std::size_t> lengths);

template <typename S>
Var<S> max_pool2d(const Var<S>& x, std::size_t window, std::size_t stride,
                  std::size_t padding);
template <typename S>
Var<S> avg_pool2d(const Var<S>& x, std::size_t window, std::size_t stride);
/// [B, C, H, W] -> [B, C]
template <typename S> Var<S> global_avg_pool(const Var<S>& x);

/// Concatenates along `axis`; all other dimensions must agree.
template <typename S>
Var<S> concat(const std::vector<Var<S>>& parts, std::size_t axis);

/// Divides every row of the last axis by its Euclidean norm. Throws
/// std::domain_error("degenerate norm") when a norm is <= 1e-12.
template <typename S> Var<S> l2_normalize(const Var<S>& x);

/// One direction of a GRU over x [B, T, d] with h0 = 0. Gate order (r, z, n)
/// with separate input and hidden biases. Steps t >= lengths[b] leave the
/// state untouched and emit zeros. Returns [B, T, h].
template <typename S>
Var<S> gru_direction(const Var<S>& x, std::span<const std::size_t> lengths,
                     const Var<S>& w_ih, const Var<S>& w_hh,
                     const Var<S>& b_ih, const Var<S>& b_hh, bool reverse);

/// Mean over ordered non-aligned pairs of the two-way hinge on a [B, B]
/// similarity matrix whose diagonal holds the aligned scores.
template <typename S> Var<S> hinge_loss(const Var<S>& similarity, S margin);

}  // namespace vgs::core
