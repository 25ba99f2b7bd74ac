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

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "duip/errors.h"
#include "duip/lstm.h"
#include "duip/ops.h"
#include "duip/rng.h"

namespace duip {
namespace {

LstmParams scalar_params(double w, double b) {
  LstmParams p = LstmParams::zeros({.n_tokens = 1, .d_in = 1, .d_h = 1});
  p.for_each([&](std::string_view name, Tensor& t) {
    t.fill(name.find(".b_") != std::string_view::npos ? b : w);
  });
  return p;
}

// Worst relative error between lstm_backward and finite differences of
// <g, h_final> over every parameter tensor.
double bptt_error(const LstmParams& params, const std::vector<std::size_t>& tokens,
                  const std::vector<std::size_t>& cats, const Tensor& g) {
  const auto enc = encode_sequence(params, tokens, cats);
  const LstmParams analytic = lstm_backward(params, enc.trace, g);
  std::vector<const Tensor*> grads;
  analytic.for_each([&](std::string_view, const Tensor& t) { grads.push_back(&t); });

  LstmParams probe = params;
  std::vector<Tensor*> slots;
  probe.for_each([&](std::string_view, Tensor& t) { slots.push_back(&t); });
  double worst = 0.0;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    Tensor& slot = *slots[k];
    const Tensor original = slot;
    const auto numeric = finite_diff_grad(
        [&](const Tensor& x) {
          slot = x;
          const double v = dot(g.data(), encode_sequence(probe, tokens, cats).h_final.data());
          return v;
        },
        original);
    slot = original;
    worst = std::max(worst, max_relative_error(*grads[k], numeric));
  }
  return worst;
}

TEST(EmbedItemTest, Rows) {
  Rng rng(1);
  LstmParams p = LstmParams::initialize({.n_tokens = 5, .d_in = 3, .d_h = 2}, rng);
  const auto first = embed_item(p, 0);
  EXPECT_EQ(std::vector<double>(first.data().begin(), first.data().end()),
            std::vector<double>(p.embed.row(0).begin(), p.embed.row(0).end()));
  EXPECT_EQ(embed_item(p, 2), embed_item(p, 2));
  std::fill(p.embed.row(3).begin(), p.embed.row(3).end(), 1.0);
  EXPECT_EQ(embed_item(p, 3), Tensor({3}, 1.0));
  EXPECT_THROW(embed_item(p, 5), IndexError);
}

TEST(InitTest, RangesAndForgetBias) {
  Rng rng(2);
  const auto p = LstmParams::initialize(
      {.n_tokens = 20, .d_in = 6, .d_h = 5, .n_categories = 3, .d_cat = 2}, rng);
  p.for_each([&](std::string_view name, const Tensor& t) {
    for (double v : t.data()) {
      if (name == "lstm.b_f") {
        EXPECT_EQ(v, 1.0);
      } else if (name.find(".b_") != std::string_view::npos) {
        EXPECT_EQ(v, 0.0);
      } else {
        EXPECT_GE(v, -0.1);
        EXPECT_LT(v, 0.1);
      }
    }
  });
  EXPECT_EQ(p.input_dim(), 8u);
  EXPECT_EQ(p.cat_embed.rows(), 3u);
}

TEST(LstmCellTest, ZeroParameters) {
  const auto p = LstmParams::zeros({.n_tokens = 2, .d_in = 3, .d_h = 4});
  const auto [state, step] =
      lstm_cell(p, Tensor::vector({0.3, -2.0, 7.0}), LstmState::zeros(4));
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(step.i[k], 0.5);
    EXPECT_EQ(step.f[k], 0.5);
    EXPECT_EQ(step.o[k], 0.5);
    EXPECT_EQ(step.c_tilde[k], 0.0);
    EXPECT_EQ(state.c[k], 0.0);
    EXPECT_EQ(state.h[k], 0.0);
  }
}

TEST(LstmCellTest, SaturatedGatesPreserveMemory) {
  LstmParams p = scalar_params(0.0, 0.0);
  p.b_f.fill(20.0);
  p.b_i.fill(-20.0);
  const LstmState prev{Tensor::vector({0.0}), Tensor::vector({0.7})};
  const auto [state, step] = lstm_cell(p, Tensor::vector({1.0}), prev);
  EXPECT_NEAR(state.c[0], 0.7, 1e-6);
}

// Scalar cell with every weight 1 and every bias 0, evaluated directly.
struct ScalarCell {
  double i, f, o, c_tilde, c, h;
};

ScalarCell scalar_reference(double x, double h_prev, double c_prev) {
  auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  ScalarCell r;
  r.i = logistic(x + h_prev);
  r.f = logistic(x + h_prev);
  r.o = logistic(x + h_prev);
  r.c_tilde = std::tanh(x + h_prev);
  r.c = r.f * c_prev + r.i * r.c_tilde;
  r.h = r.o * std::tanh(r.c);
  return r;
}

TEST(LstmCellTest, ScalarHandEvaluation) {
  const auto ref = scalar_reference(1.0, 0.0, 0.0);
  EXPECT_NEAR(ref.i, 0.7310585786, 1e-10);
  EXPECT_NEAR(ref.c_tilde, 0.7615941560, 1e-10);
  EXPECT_NEAR(ref.c, 0.5567699411, 1e-10);
  EXPECT_NEAR(ref.h, 0.3696063529, 1e-10);

  const auto p = scalar_params(1.0, 0.0);
  const auto [state, step] = lstm_cell(p, Tensor::vector({1.0}), LstmState::zeros(1));
  EXPECT_NEAR(step.i[0], 0.731059, 1e-5);
  EXPECT_NEAR(step.f[0], 0.731059, 1e-5);
  EXPECT_NEAR(step.o[0], 0.731059, 1e-5);
  EXPECT_NEAR(step.c_tilde[0], 0.761594, 1e-5);
  EXPECT_NEAR(state.c[0], 0.556770, 1e-5);
  EXPECT_NEAR(state.h[0], 0.369606, 1e-5);
}

TEST(LstmCellTest, ScalarRecurrenceMatchesReference) {
  const auto p = scalar_params(1.0, 0.0);
  LstmState state = LstmState::zeros(1);
  double h = 0.0;
  double c = 0.0;
  for (double x : {1.0, -0.5, 2.0, 0.25}) {
    state = lstm_cell(p, Tensor::vector({x}), state).first;
    const auto ref = scalar_reference(x, h, c);
    h = ref.h;
    c = ref.c;
    EXPECT_NEAR(state.h[0], h, 1e-15);
    EXPECT_NEAR(state.c[0], c, 1e-15);
  }
}

TEST(LstmCellTest, ShapeMismatch) {
  const auto p = LstmParams::zeros({.n_tokens = 2, .d_in = 3, .d_h = 4});
  EXPECT_THROW(lstm_cell(p, Tensor::vector({1.0}), LstmState::zeros(4)), DimensionError);
  EXPECT_THROW(lstm_cell(p, Tensor({3}), LstmState::zeros(2)), DimensionError);
}

TEST(LstmCellTest, GateRanges) {
  Rng rng(3);
  LstmParams p = LstmParams::initialize({.n_tokens = 4, .d_in = 5, .d_h = 6}, rng);
  p.for_each([&](std::string_view, Tensor& t) { rng.fill_uniform(t, -3.0, 3.0); });
  LstmState state = LstmState::zeros(6);
  for (int t = 0; t < 20; ++t) {
    Tensor x({5});
    rng.fill_uniform(x, -3.0, 3.0);
    auto [next, step] = lstm_cell(p, x, state);
    for (std::size_t k = 0; k < 6; ++k) {
      for (double g : {step.i[k], step.f[k], step.o[k]}) {
        EXPECT_GT(g, 0.0);
        EXPECT_LT(g, 1.0);
      }
      EXPECT_GT(step.c_tilde[k], -1.0);
      EXPECT_LT(step.c_tilde[k], 1.0);
      EXPECT_GT(next.h[k], -1.0);
      EXPECT_LT(next.h[k], 1.0);
    }
    state = next;
  }
}

TEST(EncodeSequenceTest, ZeroParamsGiveZeroState) {
  const auto p = LstmParams::zeros({.n_tokens = 6, .d_in = 3, .d_h = 4});
  for (const std::vector<std::size_t>& seq :
       {std::vector<std::size_t>{2}, std::vector<std::size_t>{0, 5, 1, 1}}) {
    const auto enc = encode_sequence(p, seq);
    for (double v : enc.h_final.data()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(enc.trace.steps.size(), seq.size());
  }
}

TEST(EncodeSequenceTest, EmptySequence) {
  const auto p = LstmParams::zeros({.n_tokens = 2, .d_in = 1, .d_h = 1});
  EXPECT_THROW(encode_sequence(p, {}), DomainError);
}

TEST(EncodeSequenceTest, IsLeftFoldOfCell) {
  Rng rng(4);
  const auto p = LstmParams::initialize(
      {.n_tokens = 9, .d_in = 4, .d_h = 5, .n_categories = 3, .d_cat = 2}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> tokens;
    std::vector<std::size_t> cats;
    const std::size_t len = 1 + rng.below(6);
    for (std::size_t t = 0; t < len; ++t) {
      tokens.push_back(rng.below(9));
      cats.push_back(rng.below(3));
    }
    LstmState state = LstmState::zeros(5);
    for (std::size_t t = 0; t < len; ++t) {
      state = lstm_cell(p, lstm_input(p, tokens[t], cats[t]), state).first;
    }
    EXPECT_EQ(encode_sequence(p, tokens, cats).h_final, state.h);
  }
}

TEST(LstmBackwardTest, ZeroUpstreamGradient) {
  Rng rng(5);
  const auto p = LstmParams::initialize({.n_tokens = 4, .d_in = 3, .d_h = 3}, rng);
  const std::vector<std::size_t> tokens = {1, 2, 3};
  const auto enc = encode_sequence(p, tokens);
  const auto grads = lstm_backward(p, enc.trace, Tensor({3}));
  grads.for_each([](std::string_view, const Tensor& t) {
    for (double v : t.data()) EXPECT_EQ(v, 0.0);
  });
}

TEST(LstmBackwardTest, ScalarCaseMatchesFiniteDifferences) {
  const auto p = scalar_params(1.0, 0.0);
  EXPECT_LT(bptt_error(p, {0}, {}, Tensor::vector({1.0})), 1e-5);
}

TEST(LstmBackwardTest, LengthThreeSequence) {
  Rng rng(6);
  const auto p = LstmParams::initialize({.n_tokens = 5, .d_in = 3, .d_h = 4}, rng);
  Tensor g({4});
  rng.fill_uniform(g, -1.0, 1.0);
  EXPECT_LT(bptt_error(p, {4, 0, 2}, {}, g), 1e-4);
}

TEST(LstmBackwardTest, RandomSmallConfigurations) {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    LstmConfig cfg;
    cfg.n_tokens = 2 + rng.below(6);
    cfg.d_in = 1 + rng.below(8);
    cfg.d_h = 1 + rng.below(8);
    const bool with_categories = trial % 3 == 0;
    if (with_categories) {
      cfg.n_categories = 1 + rng.below(3);
      cfg.d_cat = 1 + rng.below(3);
    }
    LstmParams p = LstmParams::initialize(cfg, rng);
    // Larger weights than the default init exercise the nonlinearities.
    p.for_each([&](std::string_view, Tensor& t) { rng.fill_uniform(t, -1.0, 1.0); });
    std::vector<std::size_t> tokens;
    std::vector<std::size_t> cats;
    const std::size_t len = 1 + rng.below(5);
    for (std::size_t t = 0; t < len; ++t) {
      tokens.push_back(rng.below(cfg.n_tokens));
      if (with_categories) cats.push_back(rng.below(cfg.n_categories));
    }
    Tensor g({cfg.d_h});
    rng.fill_uniform(g, -1.0, 1.0);
    EXPECT_LT(bptt_error(p, tokens, cats, g), 1e-4) << "trial " << trial;
  }
}

TEST(LstmBackwardTest, MismatchedTrace) {
  Rng rng(8);
  const auto small = LstmParams::initialize({.n_tokens = 3, .d_in = 2, .d_h = 2}, rng);
  const auto big = LstmParams::initialize({.n_tokens = 3, .d_in = 2, .d_h = 3}, rng);
  const std::vector<std::size_t> tokens = {0, 1};
  const auto enc = encode_sequence(small, tokens);
  EXPECT_THROW(lstm_backward(big, enc.trace, Tensor({3})), StateError);
}

}  // namespace
}  // namespace duip
