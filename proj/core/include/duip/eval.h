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

// Top-k evaluation: HR@k / NDCG@k with a single relevant item per example,
// the evaluation driver, and the MostPop and session-kNN baselines.

#ifndef DUIP_EVAL_H_
#define DUIP_EVAL_H_

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "duip/data.h"

namespace duip {

// Anything that can rank the item catalog for a session prefix.
// Implementations must be safe to call concurrently.
class Recommender {
 public:
  virtual ~Recommender() = default;

  // At most k distinct item indices in [0, n_items), best first. Fewer than
  // k are returned only when the catalog is exhausted.
  virtual std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                        std::size_t k) const = 0;
};

// 1 iff target is among the first k entries.
int hit_rate_at_k(std::span<const std::size_t> ranked, std::size_t target,
                  std::size_t k);

// 1 / log2(rank + 1) for a 1-based rank <= k, else 0.
double ndcg_at_k(std::span<const std::size_t> ranked, std::size_t target,
                 std::size_t k);

struct MetricsReport {
  std::string model_name;
  std::map<std::size_t, double> hr;
  std::map<std::size_t, double> ndcg;
  std::size_t n_examples = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline const std::vector<std::size_t> kDefaultCutoffs = {1, 5};

// Mean metrics over every (prefix, target) example. Per-example work is
// spread over `threads` workers; the reduction runs in example order so the
// result does not depend on the thread count.
MetricsReport evaluate_examples(const Recommender& rec,
                                std::span<const Example> examples,
                                std::span<const std::size_t> ks,
                                std::string model_name = {},
                                std::size_t threads = 1);

MetricsReport evaluate(const Recommender& rec,
                       std::span<const Session> test_sessions,
                       std::span<const std::size_t> ks = kDefaultCutoffs,
                       std::string model_name = {}, std::size_t threads = 1);

struct NamedRecommender {
  std::string name;
  const Recommender* recommender = nullptr;
};

std::vector<MetricsReport> compare(std::span<const NamedRecommender> models,
                                   std::span<const Session> test_sessions,
                                   std::span<const std::size_t> ks = kDefaultCutoffs,
                                   std::size_t threads = 1);

// `model,hr@1,hr@5,ndcg@1,ndcg@5,n` with one row per report.
std::string metrics_csv(std::span<const MetricsReport> reports);
// Fixed-width comparison table with four decimals.
std::string metrics_table(std::span<const MetricsReport> reports);

// Ranks items by training interaction count, ties by index, skipping items
// already in the prefix.
class MostPopRecommender : public Recommender {
 public:
  MostPopRecommender(std::span<const Session> train, std::size_t n_items);

  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

  const std::vector<std::size_t>& order() const { return order_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> order_;
};

// Session kNN over binary item sets. A prefix's neighbours are the
// k_neighbors training sessions with the highest cosine similarity
// |A n B| / sqrt(|A| |B|) (> 0, ties by session order); an item's score is
// the summed similarity of the neighbours containing it. Prefix items are
// excluded and unscored items follow in MostPop order.
class SknnRecommender : public Recommender {
 public:
  SknnRecommender(std::span<const Session> train, std::size_t n_items,
                  std::size_t k_neighbors = 50);

  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

  // Per-item neighbourhood scores for a prefix, before exclusion.
  std::vector<double> scores(std::span<const std::size_t> prefix) const;

 private:
  std::size_t n_items_;
  std::size_t k_neighbors_;
  std::vector<std::vector<std::size_t>> sessions_;  // sorted distinct items
  std::vector<std::vector<std::size_t>> postings_;  // item -> session ids
  MostPopRecommender popularity_;
};

std::unique_ptr<Recommender> mostpop_baseline(std::span<const Session> train,
                                              std::size_t n_items);
std::unique_ptr<Recommender> sknn_baseline(std::span<const Session> train,
                                           std::size_t n_items,
                                           std::size_t k_neighbors = 50);

}  // namespace duip

#endif  // DUIP_EVAL_H_
