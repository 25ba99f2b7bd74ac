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

// The full recommender: prefix -> LSTM -> soft prompt -> composed prompt ->
// scorer -> distribution over items, with the matching backward pass.

#ifndef DUIP_MODEL_H_
#define DUIP_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "duip/data.h"
#include "duip/eval.h"
#include "duip/lstm.h"
#include "duip/prompt.h"
#include "duip/scorer.h"

namespace duip {

struct ModelConfig {
  std::size_t d_in = 64;
  std::size_t d_h = 64;
  std::size_t d_cat = 16;  // used only when categories are attached
  std::size_t d_lm = 64;
  std::size_t d_ff = 128;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t soft_len = 4;
  std::size_t max_hard_len = 8;
  std::size_t max_len = 64;
  TransformMode transform = TransformMode::kAffine;
  std::size_t mlp_hidden = 128;

  // Throws ConfigError when a dimension is zero or the prompt cannot fit.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct DuipParams {
  LstmParams lstm;
  PromptTransform prompt;
  ScorerParams scorer;

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    self.lstm.for_each(fn);
    self.prompt.for_each(fn);
    self.scorer.for_each(fn);
  }
  template <typename Fn> void for_each(Fn&& fn) { visit(*this, fn); }
  template <typename Fn> void for_each(Fn&& fn) const { visit(*this, fn); }

  // Same shapes, all zeros.
  DuipParams zeros_like() const;
  std::size_t parameter_count() const;
};

// Visits matching tensors of two parameter sets with identical structure.
template <typename Fn>
void for_each_pair(DuipParams& a, const DuipParams& b, Fn&& fn) {
  std::vector<const Tensor*> rhs;
  b.for_each([&](std::string_view, const Tensor& t) { rhs.push_back(&t); });
  std::size_t i = 0;
  a.for_each([&](std::string_view name, Tensor& t) { fn(name, t, *rhs[i++]); });
}

// Rounds every value to the nearest 32-bit float, the checkpoint precision.
void round_to_float(DuipParams& params);

struct DuipModel {
  ModelConfig config;
  ItemVocab vocab;
  DuipParams params;

  // Randomly initialized model. Initial values are rounded to 32-bit
  // floats so an untrained checkpoint round-trips without change.
  static DuipModel initialize(const ModelConfig& config, const ItemVocab& vocab,
                              std::uint64_t seed);
  static DuipModel zeros(const ModelConfig& config, const ItemVocab& vocab);

  std::size_t n_items() const { return vocab.n_items(); }
};

struct ModelForward {
  Encoding encoding;
  SoftPrompt soft;
  HardPrompt hard;
  PromptSequence prompt;
  ScorerForward scorer;

  const Tensor& probs() const { return scorer.scored.probs; }
};

ModelForward forward(const DuipModel& model, std::span<const std::size_t> prefix);

// -log P(target | prompt(prefix)).
double forward_loss(const DuipModel& model, const Example& example);

// Accumulates d loss / d params for the cached forward pass into `grads`.
void backward_acc(const DuipModel& model, const ModelForward& fwd,
                  std::size_t target, DuipParams& grads);

// Loss and full gradient for one example.
double loss_and_gradient(const DuipModel& model, const Example& example,
                         DuipParams& grads);

// Adapts a model to the evaluation harness.
class DuipRecommender : public Recommender {
 public:
  explicit DuipRecommender(const DuipModel& model) : model_(model) {}

  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

 private:
  const DuipModel& model_;
};

}  // namespace duip

#endif  // DUIP_MODEL_H_
