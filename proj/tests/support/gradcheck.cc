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

#include "gradcheck.h"

#include <algorithm>

#include "duip/ops.h"
#include "duip/rng.h"

namespace duip::testing {
namespace {

double mean_loss_of(const DuipModel& model, std::span<const Example> examples) {
  double total = 0.0;
  for (const auto& ex : examples) total += forward_loss(model, ex);
  return total / static_cast<double>(examples.size());
}

std::vector<Tensor*> tensors_of(DuipParams& params) {
  std::vector<Tensor*> out;
  params.for_each([&](std::string_view, Tensor& t) { out.push_back(&t); });
  return out;
}

}  // namespace

std::vector<TensorCheck> check_model_gradients(const DuipModel& model,
                                               std::span<const Example> examples,
                                               double h, Stencil stencil) {
  DuipParams analytic = model.params.zeros_like();
  for (const auto& ex : examples) loss_and_gradient(model, ex, analytic);
  const double inv = 1.0 / static_cast<double>(examples.size());
  analytic.for_each([&](std::string_view, Tensor& t) {
    for (double& v : t.data()) v *= inv;
  });

  std::vector<std::string> names;
  model.params.for_each([&](std::string_view name, const Tensor&) {
    names.emplace_back(name);
  });

  DuipModel probe = model;
  auto probe_tensors = tensors_of(probe.params);
  auto grad_tensors = tensors_of(analytic);
  std::vector<TensorCheck> out;
  for (std::size_t g = 0; g < probe_tensors.size(); ++g) {
    Tensor& p = *probe_tensors[g];
    const Tensor& a = *grad_tensors[g];
    TensorCheck check{names[g], p.size(), 0.0};
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      auto at = [&](double offset) {
        p[i] = saved + offset;
        const double loss = mean_loss_of(probe, examples);
        p[i] = saved;
        return loss;
      };
      const double near = (at(h) - at(-h)) / (2.0 * h);
      const double numeric =
          stencil == Stencil::kThreePoint
              ? near
              : (4.0 * near - (at(2.0 * h) - at(-2.0 * h)) / (4.0 * h)) / 3.0;
      check.max_rel_error = std::max(check.max_rel_error, relative_error(a[i], numeric));
    }
    out.push_back(check);
  }
  return out;
}

double worst(std::span<const TensorCheck> checks) {
  double w = 0.0;
  for (const auto& c : checks) w = std::max(w, c.max_rel_error);
  return w;
}

ItemVocab numbered_vocab(std::size_t n_items, std::size_t n_categories) {
  ItemVocab vocab;
  CategoryTable table;
  for (std::size_t i = 0; i < n_items; ++i) {
    const std::string id = "i" + std::to_string(i);
    vocab.add(id);
    if (n_categories > 0) table[id] = "c" + std::to_string(i % n_categories);
  }
  if (n_categories > 0) vocab.attach_categories(table);
  return vocab;
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_in = 8;
  c.d_h = 8;
  c.d_cat = 4;
  c.d_lm = 8;
  c.d_ff = 16;
  c.layers = 1;
  c.heads = 2;
  c.soft_len = 2;
  c.max_hard_len = 4;
  c.max_len = 8;
  c.mlp_hidden = 8;
  return c;
}

std::vector<Example> random_examples(std::size_t count, std::size_t n_items,
                                     std::size_t max_len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Example> out(count);
  for (auto& ex : out) {
    const std::size_t len = 1 + rng.below(max_len);
    for (std::size_t t = 0; t < len; ++t) ex.prefix.push_back(rng.below(n_items));
    ex.target = rng.below(n_items);
  }
  return out;
}

}  // namespace duip::testing
