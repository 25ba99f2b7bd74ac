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

#include "duip/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "duip/errors.h"

namespace duip {
namespace {

struct MatDims {
  std::size_t rows;
  std::size_t cols;
};

MatDims as_matrix(const Tensor& t) {
  if (t.rank() == 1) return {1, t.shape()[0]};
  if (t.rank() == 2) return {t.shape()[0], t.shape()[1]};
  throw DimensionError("expected a vector or matrix, got shape " +
                       shape_to_string(t.shape()));
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_to_string(a.shape()) + " and " +
                       shape_to_string(b.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const MatDims da = as_matrix(a);
  const MatDims db = as_matrix(b);
  if (da.cols != db.rows) mismatch("matmul", a, b);
  Tensor out({da.rows, db.cols});
  matmul_acc(a, b, out);
  return out;
}

void matmul_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const MatDims da = as_matrix(a);
  const MatDims db = as_matrix(b);
  const MatDims dout = as_matrix(out);
  if (da.cols != db.rows) mismatch("matmul", a, b);
  if (dout.rows != da.rows || dout.cols != db.cols) mismatch("matmul", a, out);
  const std::size_t n = db.cols;
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < da.rows; ++i) {
    double* orow = po + i * n;
    for (std::size_t k = 0; k < da.cols; ++k) {
      const double aik = pa[i * da.cols + k];
      const double* brow = pb + k * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
}

void matmul_bt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const MatDims da = as_matrix(a);
  const MatDims db = as_matrix(b);
  const MatDims dout = as_matrix(out);
  if (da.cols != db.cols) mismatch("matmul_bt", a, b);
  if (dout.rows != da.rows || dout.cols != db.rows) {
    mismatch("matmul_bt", a, out);
  }
  for (std::size_t i = 0; i < da.rows; ++i) {
    const auto arow = a.data().subspan(i * da.cols, da.cols);
    for (std::size_t j = 0; j < db.rows; ++j) {
      out[i * db.rows + j] += dot(arow, b.data().subspan(j * db.cols, db.cols));
    }
  }
}

void matmul_at_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const MatDims da = as_matrix(a);
  const MatDims db = as_matrix(b);
  const MatDims dout = as_matrix(out);
  if (da.rows != db.rows) mismatch("matmul_at", a, b);
  if (dout.rows != da.cols || dout.cols != db.cols) {
    mismatch("matmul_at", a, out);
  }
  for (std::size_t m = 0; m < da.rows; ++m) {
    outer_acc(a.data().subspan(m * da.cols, da.cols),
              b.data().subspan(m * db.cols, db.cols), out);
  }
}

void vecmat_acc(std::span<const double> x, const Tensor& w,
                std::span<double> out) {
  const std::size_t n = w.cols();
  if (w.rows() != x.size() || out.size() != n) {
    throw DimensionError("vecmat: vector of length " +
                         std::to_string(x.size()) + " times matrix " +
                         shape_to_string(w.shape()) + " into length " +
                         std::to_string(out.size()));
  }
  const double* pw = w.data().data();
  double* po = out.data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    const double* wrow = pw + k * n;
    for (std::size_t j = 0; j < n; ++j) po[j] += xk * wrow[j];
  }
}

void matvec_acc(const Tensor& w, std::span<const double> g,
                std::span<double> out) {
  const std::size_t n = w.cols();
  if (g.size() != n || out.size() != w.rows()) {
    throw DimensionError("matvec: matrix " + shape_to_string(w.shape()) +
                         " times vector of length " + std::to_string(g.size()));
  }
  const double* pw = w.data().data();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double* wrow = pw + k * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += wrow[j] * g[j];
    out[k] += s;
  }
}

void outer_acc(std::span<const double> x, std::span<const double> g,
               Tensor& w) {
  const std::size_t n = w.cols();
  if (w.rows() != x.size() || g.size() != n) {
    throw DimensionError("outer: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(g.size()) + " into matrix " +
                         shape_to_string(w.shape()));
  }
  double* pw = w.data().data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    double* wrow = pw + k * n;
    for (std::size_t j = 0; j < n; ++j) wrow[j] += xk * g[j];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  require_same_shape(dst, src, "add");
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = sigmoid(v);
  return out;
}

Tensor tanh_act(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = std::tanh(v);
  return out;
}

void softmax_inplace(std::span<double> values) {
  if (values.empty()) throw DomainError("softmax of an empty vector");
  const double peak = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double& v : values) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : values) v /= total;
}

Tensor softmax(const Tensor& logits) {
  if (logits.empty()) throw DomainError("softmax of an empty vector");
  Tensor out = logits;
  softmax_inplace(out.data());
  return out;
}

double cross_entropy(const Tensor& probs, std::size_t target) {
  if (target >= probs.size()) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " outside distribution of size " +
                     std::to_string(probs.size()));
  }
  return -std::log(std::max(probs[target], kCrossEntropyEpsilon));
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h) {
  Tensor probe = x;
  Tensor grad = zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double plus = f(probe);
    probe[i] = orig - h;
    const double minus = f(probe);
    probe[i] = orig;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("finite_diff_grad: non-finite evaluation at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

double max_relative_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_relative_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, relative_error(a[i], b[i]));
  }
  return worst;
}

}  // namespace duip
