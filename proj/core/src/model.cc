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

#include "duip/model.h"

#include <algorithm>

#include "duip/errors.h"
#include "duip/ops.h"

namespace duip {
namespace {

LstmConfig lstm_config(const ModelConfig& c, const ItemVocab& vocab) {
  LstmConfig lc;
  lc.n_tokens = vocab.n_tokens();
  lc.d_in = c.d_in;
  lc.d_h = c.d_h;
  lc.n_categories = vocab.has_categories() ? vocab.n_categories() : 0;
  lc.d_cat = c.d_cat;
  return lc;
}

PromptConfig prompt_config(const ModelConfig& c) {
  PromptConfig pc;
  pc.mode = c.transform;
  pc.d_h = c.d_h;
  pc.d_lm = c.d_lm;
  pc.soft_len = c.soft_len;
  pc.mlp_hidden = c.mlp_hidden;
  return pc;
}

ScorerConfig scorer_config(const ModelConfig& c, const ItemVocab& vocab) {
  ScorerConfig sc;
  sc.n_items = vocab.n_items();
  sc.n_tokens = vocab.n_tokens();
  sc.d_lm = c.d_lm;
  sc.d_ff = c.d_ff;
  sc.layers = c.layers;
  sc.heads = c.heads;
  sc.max_len = c.max_len;
  return sc;
}

std::vector<std::size_t> categories_for(const ItemVocab& vocab,
                                        std::span<const std::size_t> prefix) {
  std::vector<std::size_t> cats;
  if (!vocab.has_categories()) return cats;
  cats.reserve(prefix.size());
  for (std::size_t tok : prefix) cats.push_back(vocab.category_of(tok));
  return cats;
}

}  // namespace

void ModelConfig::validate() const {
  for (auto [name, value] :
       {std::pair{"d_in", d_in}, {"d_h", d_h}, {"d_lm", d_lm}, {"d_ff", d_ff},
        {"layers", layers}, {"heads", heads}, {"soft_len", soft_len},
        {"max_hard_len", max_hard_len}, {"max_len", max_len},
        {"d_cat", d_cat}, {"mlp_hidden", mlp_hidden}}) {
    if (value == 0) throw ConfigError(std::string(name) + " must be positive");
  }
  if (d_lm % heads != 0) {
    throw ConfigError("d_lm must be divisible by heads");
  }
  if (max_hard_len < 2) throw ConfigError("max_hard_len must be at least 2");
  if (max_len < 1 + soft_len + max_hard_len) {
    throw ConfigError("max_len must be at least 1 + soft_len + max_hard_len");
  }
}

void round_to_float(DuipParams& params) {
  params.for_each([](std::string_view, Tensor& t) {
    for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
  });
}

DuipParams DuipParams::zeros_like() const {
  DuipParams z = *this;
  z.for_each([](std::string_view, Tensor& t) { t.set_zero(); });
  return z;
}

std::size_t DuipParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const Tensor& t) { n += t.size(); });
  return n;
}

DuipModel DuipModel::zeros(const ModelConfig& config, const ItemVocab& vocab) {
  config.validate();
  if (vocab.n_items() == 0) throw DomainError("model needs a nonempty vocabulary");
  DuipModel m;
  m.config = config;
  m.vocab = vocab;
  m.params.lstm = LstmParams::zeros(lstm_config(config, vocab));
  m.params.prompt = PromptTransform::zeros(prompt_config(config));
  m.params.scorer = ScorerParams::zeros(scorer_config(config, vocab));
  return m;
}

DuipModel DuipModel::initialize(const ModelConfig& config, const ItemVocab& vocab,
                                std::uint64_t seed) {
  config.validate();
  if (vocab.n_items() == 0) throw DomainError("model needs a nonempty vocabulary");
  Rng rng(seed);
  DuipModel m;
  m.config = config;
  m.vocab = vocab;
  m.params.lstm = LstmParams::initialize(lstm_config(config, vocab), rng);
  m.params.prompt = PromptTransform::initialize(prompt_config(config), rng);
  m.params.scorer = ScorerParams::initialize(scorer_config(config, vocab), rng);
  round_to_float(m.params);
  return m;
}

ModelForward forward(const DuipModel& model, std::span<const std::size_t> prefix) {
  if (prefix.empty()) throw DomainError("forward: empty prefix");
  const DuipParams& p = model.params;
  ModelForward f;
  const auto cats = categories_for(model.vocab, prefix);
  f.encoding = encode_sequence(p.lstm, prefix, cats);
  f.soft = forward_soft_prompt(p.prompt, f.encoding.h_final);
  f.hard = build_hard_prompt(prefix, model.vocab, model.config.max_hard_len);
  const std::size_t user = model.vocab.user();
  const auto user_row = p.scorer.token_embed.row(user);
  const Tensor user_embedding({user_row.size()},
                              std::vector<double>(user_row.begin(), user_row.end()));
  f.prompt = compose_prompt(user_embedding, f.soft.vectors, f.hard,
                            p.scorer.token_embed, user);
  f.scorer = forward_scorer(p.scorer, f.prompt);
  return f;
}

double forward_loss(const DuipModel& model, const Example& example) {
  const ModelForward f = forward(model, example.prefix);
  return cross_entropy(f.probs(), example.target);
}

void backward_acc(const DuipModel& model, const ModelForward& fwd,
                  std::size_t target, DuipParams& grads) {
  const DuipParams& p = model.params;
  const Tensor dprompt =
      scorer_backward_acc(p.scorer, fwd.prompt, fwd.scorer, target, grads.scorer);

  const std::size_t m = p.prompt.soft_len;
  const std::size_t d = p.scorer.dim();
  Tensor dsoft({m, d});
  std::size_t r = 0;
  for (std::size_t t = 0; t < fwd.prompt.length(); ++t) {
    if (fwd.prompt.slots[t] != PromptSlot::kSoft) continue;
    const auto row = dprompt.row(t);
    std::copy(row.begin(), row.end(), dsoft.row(r++).begin());
  }
  if (r != m) throw StateError("backward: prompt does not carry soft_len soft positions");

  std::vector<double> dh(p.lstm.hidden_dim(), 0.0);
  soft_prompt_backward_acc(p.prompt, fwd.soft, dsoft, grads.prompt, dh);
  lstm_backward_acc(p.lstm, fwd.encoding.trace, dh, grads.lstm);
}

double loss_and_gradient(const DuipModel& model, const Example& example,
                         DuipParams& grads) {
  const ModelForward f = forward(model, example.prefix);
  const double loss = cross_entropy(f.probs(), example.target);
  backward_acc(model, f, example.target, grads);
  return loss;
}

std::vector<std::size_t> DuipRecommender::rank(std::span<const std::size_t> prefix,
                                               std::size_t k) const {
  const ModelForward f = forward(model_, prefix);
  return top_k_by_probability(f.probs(), std::min(k, model_.n_items()));
}

}  // namespace duip
