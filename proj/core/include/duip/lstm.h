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

// LSTM user-intent encoder.
//
// For input x and previous state (H, C):
//   I  = sigmoid(x W_xi + H W_hi + b_i)
//   F  = sigmoid(x W_xf + H W_hf + b_f)
//   O  = sigmoid(x W_xo + H W_ho + b_o)
//   C~ = tanh(x W_xc + H W_hc + b_c)
//   C' = F * C + I * C~
//   H' = O * tanh(C')
// The input x is the learned embedding of the item token, optionally
// concatenated with a learned embedding of the item's category.

#ifndef DUIP_LSTM_H_
#define DUIP_LSTM_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "duip/rng.h"
#include "duip/tensor.h"

namespace duip {

struct LstmConfig {
  std::size_t n_tokens = 0;
  std::size_t d_in = 64;
  std::size_t d_h = 64;
  // Category embeddings are used only when n_categories > 0.
  std::size_t n_categories = 0;
  std::size_t d_cat = 16;
};

struct LstmParams {
  Tensor embed;      // [n_tokens x d_in]
  Tensor cat_embed;  // [n_categories x d_cat], empty without metadata
  Tensor w_xi, w_xf, w_xo, w_xc;  // [(d_in + d_cat) x d_h]
  Tensor w_hi, w_hf, w_ho, w_hc;  // [d_h x d_h]
  Tensor b_i, b_f, b_o, b_c;      // [d_h]

  // All-zero parameters of the given size.
  static LstmParams zeros(const LstmConfig& config);
  // Weights and embeddings uniform(-0.1, 0.1); biases zero except b_f = 1.
  static LstmParams initialize(const LstmConfig& config, Rng& rng);

  std::size_t token_dim() const { return embed.cols(); }
  std::size_t category_dim() const { return cat_embed.empty() ? 0 : cat_embed.cols(); }
  std::size_t input_dim() const { return w_xi.rows(); }
  std::size_t hidden_dim() const { return w_hi.rows(); }
  bool uses_categories() const { return !cat_embed.empty(); }

  // Visits every non-empty parameter tensor in a fixed order.
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn(std::string_view("lstm.embed"), self.embed);
    if (!self.cat_embed.empty()) fn(std::string_view("lstm.cat_embed"), self.cat_embed);
    fn(std::string_view("lstm.w_xi"), self.w_xi);
    fn(std::string_view("lstm.w_xf"), self.w_xf);
    fn(std::string_view("lstm.w_xo"), self.w_xo);
    fn(std::string_view("lstm.w_xc"), self.w_xc);
    fn(std::string_view("lstm.w_hi"), self.w_hi);
    fn(std::string_view("lstm.w_hf"), self.w_hf);
    fn(std::string_view("lstm.w_ho"), self.w_ho);
    fn(std::string_view("lstm.w_hc"), self.w_hc);
    fn(std::string_view("lstm.b_i"), self.b_i);
    fn(std::string_view("lstm.b_f"), self.b_f);
    fn(std::string_view("lstm.b_o"), self.b_o);
    fn(std::string_view("lstm.b_c"), self.b_c);
  }
  template <typename Fn> void for_each(Fn&& fn) { visit(*this, fn); }
  template <typename Fn> void for_each(Fn&& fn) const { visit(*this, fn); }
};

struct LstmState {
  Tensor h;
  Tensor c;

  static LstmState zeros(std::size_t d_h);
};

// Everything the backward pass needs from one timestep.
struct CellStep {
  std::size_t token = 0;
  std::size_t category = 0;
  Tensor x;
  Tensor h_prev, c_prev;
  Tensor i, f, o, c_tilde;
  Tensor c, h;
  Tensor tanh_c;
};

struct CellTrace {
  std::vector<CellStep> steps;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
};

// Row `token` of the embedding table.
Tensor embed_item(const LstmParams& params, std::size_t token);

// Embedding, concatenated with the category embedding when the parameters
// carry one.
Tensor lstm_input(const LstmParams& params, std::size_t token,
                  std::size_t category);

std::pair<LstmState, CellStep> lstm_cell(const LstmParams& params,
                                         const Tensor& x,
                                         const LstmState& prev);

struct Encoding {
  Tensor h_final;
  CellTrace trace;
};

// Left fold of lstm_cell over the embedded tokens from the zero state.
// `categories` is either empty or parallel to `tokens`.
Encoding encode_sequence(const LstmParams& params,
                         std::span<const std::size_t> tokens,
                         std::span<const std::size_t> categories = {});

// Reverse-mode gradient of (grad_h_final . h_final) with respect to every
// parameter, accumulated into `grads` (which must have the shapes of
// `params`).
void lstm_backward_acc(const LstmParams& params, const CellTrace& trace,
                       std::span<const double> grad_h_final,
                       LstmParams& grads);

LstmParams lstm_backward(const LstmParams& params, const CellTrace& trace,
                         const Tensor& grad_h_final);

}  // namespace duip

#endif  // DUIP_LSTM_H_
