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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "duip/errors.h"
#include "duip/ops.h"
#include "duip/rng.h"
#include "duip/tensor.h"

namespace duip {
namespace {

// Naive triple loop, sum accumulated from zero in ascending k.
Tensor triple_loop(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a.at(i, k) * b.at(k, j);
      out.at(i, j) = sum;
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  }
  return out;
}

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t({r, c});
  rng.fill_uniform(t, -2.0, 2.0);
  return t;
}

TEST(TensorTest, ShapesAndAccess) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  t.at(1, 2) = 4.0;
  EXPECT_EQ(t[5], 4.0);
  EXPECT_EQ(t.row(1)[2], 4.0);
  EXPECT_TRUE(Tensor().empty());
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1.0, 2.0}), DimensionError);
  EXPECT_EQ(shape_to_string({3, 4}), "[3x4]");
}

TEST(TensorTest, ZerosLikeKeepsShape) {
  const auto t = Tensor::matrix({{1, 2}, {3, 4}});
  const auto z = zeros_like(t);
  EXPECT_TRUE(z.same_shape(t));
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(MatmulTest, IdentityLeavesOperandUnchanged) {
  const auto eye = Tensor::matrix({{1, 0}, {0, 1}});
  const auto b = Tensor::matrix({{3, 4}, {5, 6}});
  EXPECT_EQ(matmul(eye, b), b);
}

TEST(MatmulTest, RowTimesColumn) {
  const auto out = matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(out, Tensor::matrix({{11}}));
}

TEST(MatmulTest, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(MatmulTest, MatchesTripleLoopBitwise) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.below(7);
    const std::size_t k = 1 + rng.below(7);
    const std::size_t n = 1 + rng.below(7);
    const auto a = random_matrix(m, k, rng);
    const auto b = random_matrix(k, n, rng);
    EXPECT_EQ(matmul(a, b), triple_loop(a, b));
  }
}

TEST(MatmulTest, IdentityIsExactOnBothSides) {
  Rng rng(4);
  const auto a = random_matrix(4, 5, rng);
  Tensor left({4, 4});
  Tensor right({5, 5});
  for (std::size_t i = 0; i < 4; ++i) left.at(i, i) = 1.0;
  for (std::size_t i = 0; i < 5; ++i) right.at(i, i) = 1.0;
  EXPECT_EQ(matmul(left, a), a);
  EXPECT_EQ(matmul(a, right), a);
  EXPECT_EQ(matmul(matmul(left, a), right), matmul(left, matmul(a, right)));
}

TEST(MatmulTest, TransposedVariantsAgreeWithOracle) {
  Rng rng(5);
  const auto a = random_matrix(3, 4, rng);
  const auto b = random_matrix(5, 4, rng);
  Tensor abt({3, 5});
  matmul_bt_acc(a, b, abt);
  const auto expect_bt = triple_loop(a, transpose(b));
  EXPECT_LT(max_relative_error(abt, expect_bt), 1e-14);

  const auto c = random_matrix(3, 6, rng);
  Tensor atc({4, 6});
  matmul_at_acc(a, c, atc);
  EXPECT_LT(max_relative_error(atc, triple_loop(transpose(a), c)), 1e-14);
}

TEST(MatmulTest, AccumulatingFormAddsToExisting) {
  const auto a = Tensor::matrix({{1, 2}});
  const auto b = Tensor::matrix({{3}, {4}});
  Tensor out({1, 1}, 1.0);
  matmul_acc(a, b, out);
  EXPECT_EQ(out[0], 12.0);
}

TEST(VectorOpsTest, VecmatMatvecOuter) {
  const auto w = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  std::vector<double> x = {1, -1};
  std::vector<double> xw(3, 0.0);
  vecmat_acc(x, w, xw);
  EXPECT_EQ(xw, (std::vector<double>{-3, -3, -3}));
  std::vector<double> g = {1, 0, 1};
  std::vector<double> wg(2, 0.0);
  matvec_acc(w, g, wg);
  EXPECT_EQ(wg, (std::vector<double>{4, 10}));
  Tensor acc({2, 3});
  outer_acc(x, g, acc);
  EXPECT_EQ(acc, Tensor::matrix({{1, 0, 1}, {-1, 0, -1}}));
  EXPECT_EQ(dot(x, x), 2.0);
}

TEST(SigmoidTest, Examples) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(1e3), 1.0, 1e-12);
  EXPECT_NEAR(sigmoid(1.0), 0.7310585786, 1e-9);
  EXPECT_NEAR(sigmoid(-1e3), 0.0, 1e-12);
}

TEST(SigmoidTest, TensorFormIsElementwise) {
  const auto out = sigmoid(Tensor::vector({0.0, 1.0}));
  EXPECT_EQ(out[0], 0.5);
  EXPECT_EQ(out[1], sigmoid(1.0));
}

TEST(TanhTest, Examples) {
  const auto out = tanh_act(Tensor::vector({0.0, 1.0}));
  EXPECT_EQ(out[0], 0.0);
  EXPECT_NEAR(out[1], 0.7615941560, 1e-9);
}

TEST(ActivationTest, OpenRangesOnModerateInputs) {
  Rng rng(6);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform(-20.0, 20.0);
    const double s = sigmoid(x);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
    const double t = tanh_act(Tensor::vector({x}))[0];
    EXPECT_GE(t, -1.0);
    EXPECT_LE(t, 1.0);
    if (std::abs(x) < 15.0) {
      EXPECT_GT(t, -1.0);
      EXPECT_LT(t, 1.0);
    }
  }
}

TEST(SoftmaxTest, Examples) {
  const auto uniform = softmax(Tensor::vector({2.5, 2.5, 2.5, 2.5}));
  for (double p : uniform.data()) EXPECT_DOUBLE_EQ(p, 0.25);
  const auto p = softmax(Tensor::vector({0.0, std::log(3.0)}));
  EXPECT_NEAR(p[0], 0.25, 1e-9);
  EXPECT_NEAR(p[1], 0.75, 1e-9);
  EXPECT_THROW(softmax(Tensor()), DomainError);
}

TEST(SoftmaxTest, SumsToOneAndPreservesArgmax) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    Tensor logits({1 + static_cast<std::size_t>(rng.below(40))});
    rng.fill_uniform(logits, -50.0, 50.0);
    const auto p = softmax(logits);
    double sum = 0.0;
    std::size_t arg_logit = 0;
    std::size_t arg_p = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sum += p[i];
      if (logits[i] > logits[arg_logit]) arg_logit = i;
      if (p[i] > p[arg_p]) arg_p = i;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(arg_p, arg_logit);
  }
}

TEST(SoftmaxTest, LargeLogitsStayFinite) {
  const auto p = softmax(Tensor::vector({1000.0, 0.0}));
  EXPECT_EQ(p[0], 1.0);
  EXPECT_TRUE(std::isfinite(p[1]));
}

TEST(CrossEntropyTest, Examples) {
  EXPECT_NEAR(cross_entropy(Tensor::vector({0.0, 1.0}), 1), 0.0, 1e-12);
  EXPECT_NEAR(cross_entropy(Tensor({4}, 0.25), 2), 1.3862944, 1e-7);
  EXPECT_NEAR(cross_entropy(Tensor::vector({0.25, 0.75}), 1), 0.2876821, 1e-6);
  EXPECT_THROW(cross_entropy(Tensor::vector({0.25, 0.75}), 2), IndexError);
}

TEST(CrossEntropyTest, ZeroProbabilityIsFinite) {
  const double loss = cross_entropy(Tensor::vector({1.0, 0.0}), 1);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(kCrossEntropyEpsilon), 1e-6);
}

TEST(FiniteDiffTest, SumOfSquares) {
  const auto g = finite_diff_grad(
      [](const Tensor& x) { return x[0] * x[0] + x[1] * x[1]; },
      Tensor::vector({1.0, 2.0}));
  EXPECT_NEAR(g[0], 2.0, 1e-6);
  EXPECT_NEAR(g[1], 4.0, 1e-6);
}

TEST(FiniteDiffTest, ConstantHasZeroGradient) {
  const auto g = finite_diff_grad([](const Tensor&) { return 3.0; },
                                  Tensor::vector({1.0, -1.0, 0.5}));
  for (double v : g.data()) EXPECT_NEAR(v, 0.0, 1e-8);
}

TEST(FiniteDiffTest, SigmoidSlopeAtZero) {
  const auto g = finite_diff_grad([](const Tensor& x) { return sigmoid(x[0]); },
                                  Tensor::vector({0.0}));
  EXPECT_NEAR(g[0], 0.25, 1e-6);
}

TEST(FiniteDiffTest, NonFiniteEvaluationThrows) {
  EXPECT_THROW(finite_diff_grad(
                   [](const Tensor&) { return std::numeric_limits<double>::infinity(); },
                   Tensor::vector({1.0})),
               NumericError);
}

TEST(FiniteDiffTest, SoftmaxCrossEntropyGradient) {
  // d/dz -log softmax(z)[t] = softmax(z) - onehot(t).
  Rng rng(8);
  Tensor z({6});
  rng.fill_uniform(z, -1.0, 1.0);
  const std::size_t target = 4;
  const auto numeric = finite_diff_grad(
      [&](const Tensor& x) { return cross_entropy(softmax(x), target); }, z);
  auto analytic = softmax(z);
  analytic[target] -= 1.0;
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-6);
}

TEST(RelativeErrorTest, Definition) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1.0, 3.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-9 / 1e-8);
}

TEST(RngTest, SameSeedSameStream) {
  Rng a(123);
  Rng b(123);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(124);
  Rng d(123);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += c.next_u64() == d.next_u64();
  EXPECT_LT(equal, 2);
}

TEST(RngTest, UniformAndBelowStayInRange) {
  Rng rng(9);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    ASSERT_LT(rng.below(7), 7u);
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(RngTest, ShuffleIsAPermutation) {
  Rng rng(10);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.shuffle(v);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(v, sorted);
}

}  // namespace
}  // namespace duip
