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

#include "duip/lstm.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "duip/errors.h"
#include "duip/ops.h"

namespace duip {
namespace {

constexpr double kInitRange = 0.1;
constexpr double kForgetBias = 1.0;

Tensor gate_preactivation(const Tensor& x, const Tensor& h_prev,
                          const Tensor& w_x, const Tensor& w_h,
                          const Tensor& b) {
  Tensor z = b;
  vecmat_acc(x.data(), w_x, z.data());
  vecmat_acc(h_prev.data(), w_h, z.data());
  return z;
}

void check_shapes(const LstmParams& p, const Tensor& x, const LstmState& prev) {
  const std::size_t d_h = p.hidden_dim();
  if (x.size() != p.input_dim()) {
    throw DimensionError("lstm_cell: input of length " + std::to_string(x.size()) +
                         " but W_x expects " + std::to_string(p.input_dim()));
  }
  if (prev.h.size() != d_h || prev.c.size() != d_h) {
    throw DimensionError("lstm_cell: state size does not match hidden size " +
                         std::to_string(d_h));
  }
  for (const Tensor* w : {&p.w_xf, &p.w_xo, &p.w_xc}) {
    require_same_shape(p.w_xi, *w, "lstm input weights");
  }
  for (const Tensor* w : {&p.w_hf, &p.w_ho, &p.w_hc}) {
    require_same_shape(p.w_hi, *w, "lstm recurrent weights");
  }
  if (p.w_hi.cols() != d_h || p.w_xi.cols() != d_h) {
    throw DimensionError("lstm weights disagree on hidden size");
  }
  for (const Tensor* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) {
    if (b->size() != d_h) throw DimensionError("lstm bias has wrong length");
  }
}

// Accumulates the weight, bias and input/hidden gradients of one gate.
void gate_backward(std::span<const double> dz, const CellStep& step,
                   const Tensor& w_x, const Tensor& w_h, Tensor& g_wx,
                   Tensor& g_wh, Tensor& g_b, std::span<double> dx,
                   std::span<double> dh_prev) {
  outer_acc(step.x.data(), dz, g_wx);
  outer_acc(step.h_prev.data(), dz, g_wh);
  axpy(1.0, dz, g_b.data());
  matvec_acc(w_x, dz, dx);
  matvec_acc(w_h, dz, dh_prev);
}

}  // namespace

LstmParams LstmParams::zeros(const LstmConfig& config) {
  if (config.n_tokens == 0 || config.d_in == 0 || config.d_h == 0) {
    throw DomainError("lstm dimensions must be positive");
  }
  LstmParams p;
  const std::size_t d_h = config.d_h;
  std::size_t d_x = config.d_in;
  p.embed = Tensor({config.n_tokens, config.d_in});
  if (config.n_categories > 0) {
    p.cat_embed = Tensor({config.n_categories, config.d_cat});
    d_x += config.d_cat;
  }
  for (Tensor* w : {&p.w_xi, &p.w_xf, &p.w_xo, &p.w_xc}) *w = Tensor({d_x, d_h});
  for (Tensor* w : {&p.w_hi, &p.w_hf, &p.w_ho, &p.w_hc}) *w = Tensor({d_h, d_h});
  for (Tensor* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) *b = Tensor({d_h});
  return p;
}

LstmParams LstmParams::initialize(const LstmConfig& config, Rng& rng) {
  LstmParams p = zeros(config);
  p.for_each([&](std::string_view name, Tensor& t) {
    if (name.find(".b_") != std::string_view::npos) return;
    rng.fill_uniform(t, -kInitRange, kInitRange);
  });
  p.b_f.fill(kForgetBias);
  return p;
}

LstmState LstmState::zeros(std::size_t d_h) {
  return {Tensor({d_h}), Tensor({d_h})};
}

Tensor embed_item(const LstmParams& params, std::size_t token) {
  if (token >= params.embed.rows()) {
    throw IndexError("token " + std::to_string(token) +
                     " outside embedding table of " +
                     std::to_string(params.embed.rows()) + " rows");
  }
  const auto row = params.embed.row(token);
  return Tensor({row.size()}, std::vector<double>(row.begin(), row.end()));
}

Tensor lstm_input(const LstmParams& params, std::size_t token,
                  std::size_t category) {
  Tensor item = embed_item(params, token);
  if (!params.uses_categories()) return item;
  if (category >= params.cat_embed.rows()) {
    throw IndexError("category " + std::to_string(category) +
                     " outside category table");
  }
  const auto cat = params.cat_embed.row(category);
  std::vector<double> x(item.data().begin(), item.data().end());
  x.insert(x.end(), cat.begin(), cat.end());
  const std::size_t width = x.size();
  return Tensor({width}, std::move(x));
}

std::pair<LstmState, CellStep> lstm_cell(const LstmParams& params,
                                         const Tensor& x,
                                         const LstmState& prev) {
  check_shapes(params, x, prev);
  const std::size_t d_h = params.hidden_dim();
  CellStep step;
  step.x = x;
  step.h_prev = prev.h;
  step.c_prev = prev.c;
  step.i = gate_preactivation(x, prev.h, params.w_xi, params.w_hi, params.b_i);
  step.f = gate_preactivation(x, prev.h, params.w_xf, params.w_hf, params.b_f);
  step.o = gate_preactivation(x, prev.h, params.w_xo, params.w_ho, params.b_o);
  step.c_tilde =
      gate_preactivation(x, prev.h, params.w_xc, params.w_hc, params.b_c);
  step.c = Tensor({d_h});
  step.h = Tensor({d_h});
  step.tanh_c = Tensor({d_h});
  for (std::size_t k = 0; k < d_h; ++k) {
    step.i[k] = sigmoid(step.i[k]);
    step.f[k] = sigmoid(step.f[k]);
    step.o[k] = sigmoid(step.o[k]);
    step.c_tilde[k] = std::tanh(step.c_tilde[k]);
    step.c[k] = step.f[k] * prev.c[k] + step.i[k] * step.c_tilde[k];
    step.tanh_c[k] = std::tanh(step.c[k]);
    step.h[k] = step.o[k] * step.tanh_c[k];
  }
  LstmState next{step.h, step.c};
  return {std::move(next), std::move(step)};
}

Encoding encode_sequence(const LstmParams& params,
                         std::span<const std::size_t> tokens,
                         std::span<const std::size_t> categories) {
  if (tokens.empty()) throw DomainError("encode_sequence: empty sequence");
  if (!categories.empty() && categories.size() != tokens.size()) {
    throw DimensionError("encode_sequence: categories not parallel to tokens");
  }
  Encoding enc;
  enc.trace.input_dim = params.input_dim();
  enc.trace.hidden_dim = params.hidden_dim();
  enc.trace.steps.reserve(tokens.size());
  LstmState state = LstmState::zeros(params.hidden_dim());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const std::size_t cat = categories.empty() ? 0 : categories[t];
    auto [next, step] = lstm_cell(params, lstm_input(params, tokens[t], cat), state);
    step.token = tokens[t];
    step.category = cat;
    state = std::move(next);
    enc.trace.steps.push_back(std::move(step));
  }
  enc.h_final = std::move(state.h);
  return enc;
}

void lstm_backward_acc(const LstmParams& params, const CellTrace& trace,
                       std::span<const double> grad_h_final,
                       LstmParams& grads) {
  const std::size_t d_h = params.hidden_dim();
  const std::size_t d_x = params.input_dim();
  if (trace.hidden_dim != d_h || trace.input_dim != d_x) {
    throw StateError("lstm_backward: trace was produced by different parameters");
  }
  if (grad_h_final.size() != d_h) {
    throw DimensionError("lstm_backward: gradient length does not match hidden size");
  }
  if (!grads.embed.same_shape(params.embed) || !grads.w_xi.same_shape(params.w_xi) ||
      !grads.cat_embed.same_shape(params.cat_embed)) {
    throw StateError("lstm_backward: gradient buffers do not match parameters");
  }

  const std::size_t d_tok = params.token_dim();
  std::vector<double> dh(grad_h_final.begin(), grad_h_final.end());
  std::vector<double> dc(d_h, 0.0);
  std::vector<double> dzi(d_h), dzf(d_h), dzo(d_h), dzc(d_h);
  std::vector<double> dx(d_x), dh_prev(d_h);

  for (std::size_t t = trace.steps.size(); t-- > 0;) {
    const CellStep& s = trace.steps[t];
    if (s.x.size() != d_x || s.h.size() != d_h) {
      throw StateError("lstm_backward: trace step has wrong dimensions");
    }
    for (std::size_t k = 0; k < d_h; ++k) {
      const double tc = s.tanh_c[k];
      const double dck = dc[k] + dh[k] * s.o[k] * (1.0 - tc * tc);
      dzo[k] = dh[k] * tc * s.o[k] * (1.0 - s.o[k]);
      dzi[k] = dck * s.c_tilde[k] * s.i[k] * (1.0 - s.i[k]);
      dzf[k] = dck * s.c_prev[k] * s.f[k] * (1.0 - s.f[k]);
      dzc[k] = dck * s.i[k] * (1.0 - s.c_tilde[k] * s.c_tilde[k]);
      dc[k] = dck * s.f[k];
    }
    std::fill(dx.begin(), dx.end(), 0.0);
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    gate_backward(dzi, s, params.w_xi, params.w_hi, grads.w_xi, grads.w_hi,
                  grads.b_i, dx, dh_prev);
    gate_backward(dzf, s, params.w_xf, params.w_hf, grads.w_xf, grads.w_hf,
                  grads.b_f, dx, dh_prev);
    gate_backward(dzo, s, params.w_xo, params.w_ho, grads.w_xo, grads.w_ho,
                  grads.b_o, dx, dh_prev);
    gate_backward(dzc, s, params.w_xc, params.w_hc, grads.w_xc, grads.w_hc,
                  grads.b_c, dx, dh_prev);

    if (s.token >= grads.embed.rows()) {
      throw StateError("lstm_backward: trace token outside embedding table");
    }
    axpy(1.0, std::span<const double>(dx).first(d_tok), grads.embed.row(s.token));
    if (params.uses_categories()) {
      axpy(1.0, std::span<const double>(dx).subspan(d_tok),
           grads.cat_embed.row(s.category));
    }
    dh.swap(dh_prev);
  }
}

LstmParams lstm_backward(const LstmParams& params, const CellTrace& trace,
                         const Tensor& grad_h_final) {
  LstmParams grads = params;
  grads.for_each([](std::string_view, Tensor& t) { t.set_zero(); });
  lstm_backward_acc(params, trace, grad_h_final.data(), grads);
  return grads;
}

}  // namespace duip
