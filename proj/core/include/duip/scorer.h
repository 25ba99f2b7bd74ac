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

// Miniature decoder-only transformer that scores the item catalog given a
// prompt sequence.
//
// Each block is pre-norm:
//   x = x + Attn(LN1(x))      causal multi-head attention, no projection bias
//   x = x + W2 gelu(W1 LN2(x))
// The representation at the last prompt position goes through a final layer
// norm and a linear head with one logit per item; special tokens are never
// predictable.

#ifndef DUIP_SCORER_H_
#define DUIP_SCORER_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "duip/prompt.h"
#include "duip/rng.h"
#include "duip/tensor.h"

namespace duip {

struct ScorerConfig {
  std::size_t n_items = 0;
  std::size_t n_tokens = 0;
  std::size_t d_lm = 64;
  std::size_t d_ff = 128;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t max_len = 64;
};

struct ScorerLayer {
  Tensor ln1_gain, ln1_bias;        // [d]
  Tensor w_q, w_k, w_v, w_o;        // [d x d]
  Tensor ln2_gain, ln2_bias;        // [d]
  Tensor w_ff1;                     // [d x d_ff]
  Tensor w_ff2;                     // [d_ff x d]
};

struct ScorerParams {
  std::size_t heads = 1;
  Tensor token_embed;  // [n_tokens x d], shared with the hard prompt
  Tensor pos_embed;    // [max_len x d]
  std::vector<ScorerLayer> layers;
  Tensor lnf_gain, lnf_bias;  // [d]
  Tensor head_w;              // [d x n_items]
  Tensor head_b;              // [n_items]

  static ScorerParams zeros(const ScorerConfig& config);
  // Matrices uniform(-0.1, 0.1), layer-norm gains 1, biases 0.
  static ScorerParams initialize(const ScorerConfig& config, Rng& rng);

  std::size_t dim() const { return token_embed.cols(); }
  std::size_t n_items() const { return head_b.size(); }
  std::size_t max_len() const { return pos_embed.rows(); }

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn(std::string_view("scorer.token_embed"), self.token_embed);
    fn(std::string_view("scorer.pos_embed"), self.pos_embed);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& layer = self.layers[l];
      const std::string p = "scorer.layer" + std::to_string(l) + ".";
      fn(std::string_view(p + "ln1_gain"), layer.ln1_gain);
      fn(std::string_view(p + "ln1_bias"), layer.ln1_bias);
      fn(std::string_view(p + "w_q"), layer.w_q);
      fn(std::string_view(p + "w_k"), layer.w_k);
      fn(std::string_view(p + "w_v"), layer.w_v);
      fn(std::string_view(p + "w_o"), layer.w_o);
      fn(std::string_view(p + "ln2_gain"), layer.ln2_gain);
      fn(std::string_view(p + "ln2_bias"), layer.ln2_bias);
      fn(std::string_view(p + "w_ff1"), layer.w_ff1);
      fn(std::string_view(p + "w_ff2"), layer.w_ff2);
    }
    fn(std::string_view("scorer.lnf_gain"), self.lnf_gain);
    fn(std::string_view("scorer.lnf_bias"), self.lnf_bias);
    fn(std::string_view("scorer.head_w"), self.head_w);
    fn(std::string_view("scorer.head_b"), self.head_b);
  }
  template <typename Fn> void for_each(Fn&& fn) { visit(*this, fn); }
  template <typename Fn> void for_each(Fn&& fn) const { visit(*this, fn); }
};

// Per-row layer norm cache.
struct NormCache {
  Tensor normalized;           // (x - mean) / std, [rows x d]
  std::vector<double> inv_std;
};

struct LayerTrace {
  Tensor input;           // residual stream entering the block
  NormCache ln1;
  Tensor attn_in;         // LN1 output
  Tensor q, k, v;         // [T x d]
  std::vector<Tensor> attn_probs;  // per head, [T x T], zero above diagonal
  Tensor attn_concat;     // heads concatenated, [T x d]
  Tensor mid;             // residual after attention
  NormCache ln2;
  Tensor ff_in;           // LN2 output
  Tensor ff_pre;          // before gelu, [T x d_ff]
  Tensor ff_act;          // after gelu
};

struct ScorerTrace {
  std::size_t length = 0;
  std::vector<LayerTrace> layers;
  Tensor final_state;     // residual stream at the last position, [d]
  NormCache lnf;
  Tensor final_norm;      // [d]
};

struct ScoredItems {
  Tensor probs;                      // [n_items]
  std::vector<std::size_t> ranking;  // descending probability, ties by index
};

struct ScorerForward {
  ScoredItems scored;
  ScorerTrace trace;
};

ScorerForward forward_scorer(const ScorerParams& params,
                             const PromptSequence& prompt);

ScoredItems score_candidates(const ScorerParams& params,
                             const PromptSequence& prompt);

// Argmax of the conditional distribution, lowest index on ties.
std::size_t predict_next(const ScorerParams& params, const PromptSequence& prompt);

std::vector<std::size_t> top_k(const ScorerParams& params,
                               const PromptSequence& prompt, std::size_t k);

// Descending-probability order, ties broken by ascending index.
std::vector<std::size_t> rank_by_probability(const Tensor& probs);
std::vector<std::size_t> top_k_by_probability(const Tensor& probs, std::size_t k);

// Gradient of cross_entropy(probs, target) given a cached forward pass.
// Parameter gradients are accumulated into `grads`. Rows of the prompt that
// came from the token table (user and hard positions) are also accumulated
// into grads.token_embed. Returns d loss / d prompt embeddings, [T x d], so
// the caller can continue through the soft positions.
Tensor scorer_backward_acc(const ScorerParams& params,
                           const PromptSequence& prompt,
                           const ScorerForward& forward, std::size_t target,
                           ScorerParams& grads);

struct ScorerGradients {
  ScorerParams params;
  Tensor prompt;  // [T x d]
};

ScorerGradients scorer_backward(const ScorerParams& params,
                                const PromptSequence& prompt,
                                const ScorerForward& forward,
                                std::size_t target);

}  // namespace duip

#endif  // DUIP_SCORER_H_
