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

// Prompt construction: the encoder's hidden state becomes m continuous
// "soft" vectors, the recent history becomes discrete "hard" tokens, and
// the scorer sees
//
//   [USER] [soft_1 .. soft_m] [SEP item item ...]
//
// The textual template "<user> has interacted with {soft} + hard prompt"
// is kept structurally; filler words carry nothing for a scorer trained
// from scratch and are not emitted.

#ifndef DUIP_PROMPT_H_
#define DUIP_PROMPT_H_

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "duip/data.h"
#include "duip/rng.h"
#include "duip/tensor.h"

namespace duip {

enum class TransformMode { kAffine, kMlp1 };

TransformMode parse_transform_mode(std::string_view name);
std::string_view transform_mode_name(TransformMode mode);

struct PromptConfig {
  TransformMode mode = TransformMode::kAffine;
  std::size_t d_h = 64;
  std::size_t d_lm = 64;
  std::size_t soft_len = 4;
  std::size_t mlp_hidden = 128;  // kMlp1 only
};

// f(h): affine  h W1 + b1, or mlp1  tanh(h W0 + b0) W1 + b1, reshaped to
// soft_len vectors of width d_lm.
struct PromptTransform {
  TransformMode mode = TransformMode::kAffine;
  std::size_t soft_len = 0;
  std::size_t d_lm = 0;
  Tensor w0, b0;  // [d_h x mlp_hidden], [mlp_hidden]; empty for kAffine
  Tensor w1, b1;  // [in x soft_len*d_lm], [soft_len*d_lm]

  static PromptTransform zeros(const PromptConfig& config);
  static PromptTransform initialize(const PromptConfig& config, Rng& rng);

  std::size_t input_dim() const {
    return mode == TransformMode::kMlp1 ? w0.rows() : w1.rows();
  }

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    if (!self.w0.empty()) {
      fn(std::string_view("prompt.w0"), self.w0);
      fn(std::string_view("prompt.b0"), self.b0);
    }
    fn(std::string_view("prompt.w1"), self.w1);
    fn(std::string_view("prompt.b1"), self.b1);
  }
  template <typename Fn> void for_each(Fn&& fn) { visit(*this, fn); }
  template <typename Fn> void for_each(Fn&& fn) const { visit(*this, fn); }
};

struct SoftPrompt {
  Tensor vectors;  // [soft_len x d_lm], one soft vector per row
  Tensor input;    // h as given
  Tensor hidden;   // tanh layer output; kMlp1 only
};

SoftPrompt forward_soft_prompt(const PromptTransform& transform, const Tensor& h);

// f(h) as a list of soft_len vectors.
std::vector<Tensor> build_soft_prompt(const PromptTransform& transform,
                                      const Tensor& h);

// Accumulates parameter gradients into `grads` and the input gradient into
// `grad_h`, given d loss / d vectors.
void soft_prompt_backward_acc(const PromptTransform& transform,
                              const SoftPrompt& forward,
                              const Tensor& grad_vectors,
                              PromptTransform& grads, std::span<double> grad_h);

struct HardPrompt {
  std::vector<std::size_t> token_ids;
};

// [SEP] followed by the most recent prefix items in chronological order.
// With categories attached to `vocab`, each item is followed by its
// CAT token and takes two slots. The result never exceeds max_hard_len.
HardPrompt build_hard_prompt(std::span<const std::size_t> prefix,
                             const ItemVocab& vocab, std::size_t max_hard_len);

// Same, for callers that only know the item count (no categories).
HardPrompt build_hard_prompt(std::span<const std::size_t> prefix,
                             std::size_t n_items, std::size_t max_hard_len);

enum class PromptSlot { kUser, kSoft, kHard };

inline constexpr std::size_t kNoToken = std::numeric_limits<std::size_t>::max();

struct PromptSequence {
  Tensor embeddings;                    // [length x d_lm]
  std::vector<PromptSlot> slots;        // per position
  std::vector<std::size_t> token_ids;   // kNoToken at soft positions

  std::size_t length() const { return slots.size(); }
  std::size_t dim() const { return embeddings.cols(); }
};

// Lays out [user] ++ soft ++ hard. Hard tokens are looked up in
// `token_embed`. `user_token` is recorded so gradients at position 0 can be
// routed back to the embedding table; pass kNoToken for a free-standing
// user vector.
PromptSequence compose_prompt(const Tensor& user_embedding,
                              const Tensor& soft_vectors,
                              const HardPrompt& hard, const Tensor& token_embed,
                              std::size_t user_token = kNoToken);
PromptSequence compose_prompt(const Tensor& user_embedding,
                              std::span<const Tensor> soft,
                              const HardPrompt& hard, const Tensor& token_embed,
                              std::size_t user_token = kNoToken);

}  // namespace duip

#endif  // DUIP_PROMPT_H_
