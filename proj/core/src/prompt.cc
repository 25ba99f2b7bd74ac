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

#include "duip/prompt.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "duip/errors.h"
#include "duip/ops.h"

namespace duip {
namespace {

constexpr double kInitRange = 0.1;

}  // namespace

TransformMode parse_transform_mode(std::string_view name) {
  if (name == "affine") return TransformMode::kAffine;
  if (name == "mlp1") return TransformMode::kMlp1;
  throw ConfigError("unknown prompt transform '" + std::string(name) +
                    "' (expected affine or mlp1)");
}

std::string_view transform_mode_name(TransformMode mode) {
  return mode == TransformMode::kMlp1 ? "mlp1" : "affine";
}

PromptTransform PromptTransform::zeros(const PromptConfig& config) {
  if (config.d_h == 0 || config.d_lm == 0 || config.soft_len == 0) {
    throw DomainError("prompt transform dimensions must be positive");
  }
  PromptTransform t;
  t.mode = config.mode;
  t.soft_len = config.soft_len;
  t.d_lm = config.d_lm;
  const std::size_t out = config.soft_len * config.d_lm;
  std::size_t in = config.d_h;
  if (config.mode == TransformMode::kMlp1) {
    if (config.mlp_hidden == 0) throw DomainError("mlp hidden width must be positive");
    t.w0 = Tensor({config.d_h, config.mlp_hidden});
    t.b0 = Tensor({config.mlp_hidden});
    in = config.mlp_hidden;
  }
  t.w1 = Tensor({in, out});
  t.b1 = Tensor({out});
  return t;
}

PromptTransform PromptTransform::initialize(const PromptConfig& config, Rng& rng) {
  PromptTransform t = zeros(config);
  if (!t.w0.empty()) rng.fill_uniform(t.w0, -kInitRange, kInitRange);
  rng.fill_uniform(t.w1, -kInitRange, kInitRange);
  return t;
}

SoftPrompt forward_soft_prompt(const PromptTransform& transform, const Tensor& h) {
  if (h.size() != transform.input_dim()) {
    throw DimensionError("soft prompt: hidden state of length " +
                         std::to_string(h.size()) + " but transform expects " +
                         std::to_string(transform.input_dim()));
  }
  if (transform.w1.cols() != transform.soft_len * transform.d_lm ||
      transform.b1.size() != transform.w1.cols()) {
    throw DimensionError("soft prompt: output projection does not reshape to " +
                         std::to_string(transform.soft_len) + " x " +
                         std::to_string(transform.d_lm));
  }
  SoftPrompt out;
  out.input = h;
  Tensor flat = transform.b1;
  if (transform.mode == TransformMode::kMlp1) {
    out.hidden = transform.b0;
    vecmat_acc(h.data(), transform.w0, out.hidden.data());
    for (double& v : out.hidden.data()) v = std::tanh(v);
    vecmat_acc(out.hidden.data(), transform.w1, flat.data());
  } else {
    vecmat_acc(h.data(), transform.w1, flat.data());
  }
  out.vectors = Tensor({transform.soft_len, transform.d_lm},
                       std::vector<double>(flat.data().begin(), flat.data().end()));
  return out;
}

std::vector<Tensor> build_soft_prompt(const PromptTransform& transform,
                                      const Tensor& h) {
  const SoftPrompt sp = forward_soft_prompt(transform, h);
  std::vector<Tensor> out;
  out.reserve(transform.soft_len);
  for (std::size_t r = 0; r < transform.soft_len; ++r) {
    const auto row = sp.vectors.row(r);
    out.emplace_back(Shape{row.size()}, std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

void soft_prompt_backward_acc(const PromptTransform& transform,
                              const SoftPrompt& forward,
                              const Tensor& grad_vectors,
                              PromptTransform& grads, std::span<double> grad_h) {
  if (grad_vectors.size() != transform.w1.cols()) {
    throw DimensionError("soft prompt backward: gradient has wrong size");
  }
  if (grad_h.size() != transform.input_dim()) {
    throw DimensionError("soft prompt backward: input gradient has wrong size");
  }
  const auto g = grad_vectors.data();
  axpy(1.0, g, grads.b1.data());
  if (transform.mode == TransformMode::kMlp1) {
    outer_acc(forward.hidden.data(), g, grads.w1);
    std::vector<double> dhidden(transform.w1.rows(), 0.0);
    matvec_acc(transform.w1, g, dhidden);
    for (std::size_t k = 0; k < dhidden.size(); ++k) {
      const double a = forward.hidden[k];
      dhidden[k] *= 1.0 - a * a;
    }
    axpy(1.0, dhidden, grads.b0.data());
    outer_acc(forward.input.data(), dhidden, grads.w0);
    matvec_acc(transform.w0, dhidden, grad_h);
  } else {
    outer_acc(forward.input.data(), g, grads.w1);
    matvec_acc(transform.w1, g, grad_h);
  }
}

HardPrompt build_hard_prompt(std::span<const std::size_t> prefix,
                             const ItemVocab& vocab, std::size_t max_hard_len) {
  const bool with_categories = vocab.has_categories();
  const std::size_t per_item = with_categories ? 2 : 1;
  if (max_hard_len < 1 + per_item) {
    throw DomainError("max_hard_len " + std::to_string(max_hard_len) +
                      " cannot hold the separator and one item");
  }
  const std::size_t keep = std::min(prefix.size(), (max_hard_len - 1) / per_item);
  HardPrompt hp;
  hp.token_ids.reserve(1 + keep * per_item);
  hp.token_ids.push_back(vocab.sep());
  for (std::size_t i = prefix.size() - keep; i < prefix.size(); ++i) {
    hp.token_ids.push_back(prefix[i]);
    if (with_categories) {
      hp.token_ids.push_back(vocab.category_token(vocab.category_of(prefix[i])));
    }
  }
  return hp;
}

HardPrompt build_hard_prompt(std::span<const std::size_t> prefix,
                             std::size_t n_items, std::size_t max_hard_len) {
  if (max_hard_len < 2) {
    throw DomainError("max_hard_len must be at least 2");
  }
  const std::size_t keep = std::min(prefix.size(), max_hard_len - 1);
  HardPrompt hp;
  hp.token_ids.push_back(n_items + 2);  // SEP
  hp.token_ids.insert(hp.token_ids.end(), prefix.end() - static_cast<std::ptrdiff_t>(keep),
                      prefix.end());
  return hp;
}

PromptSequence compose_prompt(const Tensor& user_embedding,
                              const Tensor& soft_vectors,
                              const HardPrompt& hard, const Tensor& token_embed,
                              std::size_t user_token) {
  const std::size_t d = user_embedding.size();
  const std::size_t m = soft_vectors.empty() ? 0 : soft_vectors.rows();
  if (m > 0 && soft_vectors.cols() != d) {
    throw DimensionError("compose_prompt: soft vectors have width " +
                         std::to_string(soft_vectors.cols()) +
                         " but the user embedding has " + std::to_string(d));
  }
  if (!hard.token_ids.empty() && token_embed.cols() != d) {
    throw DimensionError("compose_prompt: token embeddings have width " +
                         std::to_string(token_embed.cols()) + ", expected " +
                         std::to_string(d));
  }
  const std::size_t length = 1 + m + hard.token_ids.size();
  PromptSequence seq;
  seq.embeddings = Tensor({length, d});
  seq.slots.reserve(length);
  seq.token_ids.reserve(length);

  std::copy(user_embedding.data().begin(), user_embedding.data().end(),
            seq.embeddings.row(0).begin());
  seq.slots.push_back(PromptSlot::kUser);
  seq.token_ids.push_back(user_token);
  for (std::size_t r = 0; r < m; ++r) {
    const auto src = soft_vectors.row(r);
    std::copy(src.begin(), src.end(), seq.embeddings.row(1 + r).begin());
    seq.slots.push_back(PromptSlot::kSoft);
    seq.token_ids.push_back(kNoToken);
  }
  for (std::size_t j = 0; j < hard.token_ids.size(); ++j) {
    const std::size_t tok = hard.token_ids[j];
    if (tok >= token_embed.rows()) {
      throw IndexError("compose_prompt: hard token " + std::to_string(tok) +
                       " outside scorer vocabulary");
    }
    const auto src = token_embed.row(tok);
    std::copy(src.begin(), src.end(), seq.embeddings.row(1 + m + j).begin());
    seq.slots.push_back(PromptSlot::kHard);
    seq.token_ids.push_back(tok);
  }
  return seq;
}

PromptSequence compose_prompt(const Tensor& user_embedding,
                              std::span<const Tensor> soft,
                              const HardPrompt& hard, const Tensor& token_embed,
                              std::size_t user_token) {
  Tensor stacked;
  if (!soft.empty()) {
    const std::size_t d = soft.front().size();
    stacked = Tensor({soft.size(), d});
    for (std::size_t r = 0; r < soft.size(); ++r) {
      if (soft[r].size() != d || d != user_embedding.size()) {
        throw DimensionError("compose_prompt: soft vector " + std::to_string(r) +
                             " has width " + std::to_string(soft[r].size()) +
                             ", expected " + std::to_string(user_embedding.size()));
      }
      std::copy(soft[r].data().begin(), soft[r].data().end(),
                stacked.row(r).begin());
    }
  }
  return compose_prompt(user_embedding, stacked, hard, token_embed, user_token);
}

}  // namespace duip
