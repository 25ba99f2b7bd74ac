// Copyright 2026 The DUIP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense kernels shared by the encoder, prompt transform and scorer.
//
// All matrix products accumulate over the inner dimension in increasing
// index order, one output element at a time, so results are bit-for-bit
// reproducible and equal to a naive triple loop.

#ifndef DUIP_OPS_H_
#define DUIP_OPS_H_

#include <cstddef>
#include <functional>
#include <span>

#include "duip/tensor.h"

namespace duip {

// Floor inside cross_entropy so that log never sees zero.
inline constexpr double kCrossEntropyEpsilon = 1e-12;

// a[m x k] * b[k x n]. Rank-1 operands are treated as row vectors.
Tensor matmul(const Tensor& a, const Tensor& b);

// out[m x n] += a[m x k] * b[k x n]
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& out);
// out[m x n] += a[m x k] * b[n x k]^T
void matmul_bt_acc(const Tensor& a, const Tensor& b, Tensor& out);
// out[k x n] += a[m x k]^T * b[m x n]
void matmul_at_acc(const Tensor& a, const Tensor& b, Tensor& out);

// Vector forms used inside recurrent and per-position loops.
// out[n] += x[k] * w[k x n]
void vecmat_acc(std::span<const double> x, const Tensor& w,
                std::span<double> out);
// out[k] += w[k x n] * g[n]
void matvec_acc(const Tensor& w, std::span<const double> g,
                std::span<double> out);
// w[k x n] += x[k] g[n]^T
void outer_acc(std::span<const double> x, std::span<const double> g,
               Tensor& w);

void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void add_inplace(Tensor& dst, const Tensor& src);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_act(const Tensor& x);

// Numerically stable softmax of a rank-1 tensor (max subtraction).
Tensor softmax(const Tensor& logits);
void softmax_inplace(std::span<double> values);

// -log(max(probs[target], kCrossEntropyEpsilon)).
double cross_entropy(const Tensor& probs, std::size_t target);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h = 1e-5);

// |a - b| / max(1e-8, |a| + |b|), the comparison used by every gradient check.
double relative_error(double a, double b);
double max_relative_error(const Tensor& a, const Tensor& b);

}  // namespace duip

#endif  // DUIP_OPS_H_
