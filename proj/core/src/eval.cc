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

#include "duip/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "duip/errors.h"

namespace duip {
namespace {

// 0-based position of target in the first k entries, or k if absent.
std::size_t position_within(std::span<const std::size_t> ranked,
                            std::size_t target, std::size_t k) {
  const std::size_t limit = std::min(k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked[i] == target) return i;
  }
  return k;
}

void require_cutoff(std::span<const std::size_t> ranked, std::size_t k) {
  if (k == 0 || k > ranked.size()) {
    throw DomainError("cutoff k = " + std::to_string(k) +
                      " outside [1, " + std::to_string(ranked.size()) + "]");
  }
}

double discount(std::size_t position) {
  return 1.0 / std::log2(static_cast<double>(position) + 2.0);
}

std::string format_metric(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::vector<std::size_t> distinct_sorted(std::span<const std::size_t> items,
                                         std::size_t n_items) {
  std::vector<std::size_t> out;
  for (std::size_t it : items) {
    if (it < n_items) out.push_back(it);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

int hit_rate_at_k(std::span<const std::size_t> ranked, std::size_t target,
                  std::size_t k) {
  require_cutoff(ranked, k);
  return position_within(ranked, target, k) < k ? 1 : 0;
}

double ndcg_at_k(std::span<const std::size_t> ranked, std::size_t target,
                 std::size_t k) {
  require_cutoff(ranked, k);
  const std::size_t pos = position_within(ranked, target, k);
  return pos < k ? discount(pos) : 0.0;
}

MetricsReport evaluate_examples(const Recommender& rec,
                                std::span<const Example> examples,
                                std::span<const std::size_t> ks,
                                std::string model_name, std::size_t threads) {
  if (examples.empty()) throw DomainError("evaluate: no examples");
  if (ks.empty()) throw DomainError("evaluate: no cutoffs");
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  if (*std::min_element(ks.begin(), ks.end()) == 0) {
    throw DomainError("evaluate: cutoffs must be positive");
  }

  // Per-example 0-based position of the target (k_max when missed).
  std::vector<std::size_t> positions(examples.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const auto ranked = rec.rank(examples[e].prefix, k_max);
      positions[e] = position_within(ranked, examples[e].target, k_max);
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, examples.size());
  if (threads == 1) {
    work(0, examples.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (examples.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(examples.size(), begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  MetricsReport report;
  report.model_name = std::move(model_name);
  report.n_examples = examples.size();
  const auto n = static_cast<double>(examples.size());
  for (std::size_t k : ks) {
    double hits = 0.0;
    double gain = 0.0;
    for (std::size_t pos : positions) {
      if (pos < k) {
        hits += 1.0;
        gain += discount(pos);
      }
    }
    report.hr[k] = hits / n;
    report.ndcg[k] = gain / n;
  }
  return report;
}

MetricsReport evaluate(const Recommender& rec,
                       std::span<const Session> test_sessions,
                       std::span<const std::size_t> ks, std::string model_name,
                       std::size_t threads) {
  const auto examples = make_examples(test_sessions);
  return evaluate_examples(rec, examples, ks, std::move(model_name), threads);
}

std::vector<MetricsReport> compare(std::span<const NamedRecommender> models,
                                   std::span<const Session> test_sessions,
                                   std::span<const std::size_t> ks,
                                   std::size_t threads) {
  if (models.empty()) throw DomainError("compare: no models");
  const auto examples = make_examples(test_sessions);
  std::vector<MetricsReport> rows;
  rows.reserve(models.size());
  for (const auto& m : models) {
    if (m.recommender == nullptr) {
      throw DomainError("compare: model '" + m.name + "' has no recommender");
    }
    rows.push_back(evaluate_examples(*m.recommender, examples, ks, m.name, threads));
  }
  return rows;
}

std::string metrics_csv(std::span<const MetricsReport> reports) {
  std::string out = "model";
  if (reports.empty()) return out + ",n\n";
  for (const auto& [k, _] : reports.front().hr) out += ",hr@" + std::to_string(k);
  for (const auto& [k, _] : reports.front().ndcg) out += ",ndcg@" + std::to_string(k);
  out += ",n\n";
  for (const auto& r : reports) {
    out += r.model_name;
    for (const auto& [k, v] : r.hr) out += "," + format_metric(v, 6);
    for (const auto& [k, v] : r.ndcg) out += "," + format_metric(v, 6);
    out += "," + std::to_string(r.n_examples) + "\n";
  }
  return out;
}

std::string metrics_table(std::span<const MetricsReport> reports) {
  std::size_t name_width = 5;
  for (const auto& r : reports) name_width = std::max(name_width, r.model_name.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("Model", name_width);
  if (!reports.empty()) {
    for (const auto& [k, _] : reports.front().hr) out += "  " + pad("HR@" + std::to_string(k), 7);
    for (const auto& [k, _] : reports.front().ndcg) out += "  " + pad("NDCG@" + std::to_string(k), 7);
  }
  out += "\n";
  for (const auto& r : reports) {
    out += pad(r.model_name, name_width);
    for (const auto& [k, v] : r.hr) out += "  " + pad(format_metric(v, 4), 7);
    for (const auto& [k, v] : r.ndcg) out += "  " + pad(format_metric(v, 4), 7);
    out += "\n";
  }
  return out;
}

MostPopRecommender::MostPopRecommender(std::span<const Session> train,
                                       std::size_t n_items)
    : counts_(n_items, 0), order_(n_items) {
  for (const auto& s : train) {
    for (std::size_t it : s.items) {
      if (it < n_items) ++counts_[it];
    }
  }
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return counts_[a] > counts_[b];
  });
}

std::vector<std::size_t> MostPopRecommender::rank(
    std::span<const std::size_t> prefix, std::size_t k) const {
  std::unordered_set<std::size_t> seen(prefix.begin(), prefix.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t it : order_) {
    if (out.size() == k) break;
    if (!seen.contains(it)) out.push_back(it);
  }
  return out;
}

SknnRecommender::SknnRecommender(std::span<const Session> train,
                                 std::size_t n_items, std::size_t k_neighbors)
    : n_items_(n_items),
      k_neighbors_(k_neighbors),
      postings_(n_items),
      popularity_(train, n_items) {
  if (train.empty()) throw DomainError("sknn: no training sessions");
  if (k_neighbors == 0) throw DomainError("sknn: k_neighbors must be positive");
  sessions_.reserve(train.size());
  for (std::size_t s = 0; s < train.size(); ++s) {
    sessions_.push_back(distinct_sorted(train[s].items, n_items));
    for (std::size_t it : sessions_.back()) postings_[it].push_back(s);
  }
}

std::vector<double> SknnRecommender::scores(
    std::span<const std::size_t> prefix) const {
  std::vector<double> out(n_items_, 0.0);
  const auto query = distinct_sorted(prefix, n_items_);
  if (query.empty()) return out;

  std::vector<std::size_t> overlap(sessions_.size(), 0);
  std::vector<std::size_t> touched;
  for (std::size_t it : query) {
    for (std::size_t s : postings_[it]) {
      if (overlap[s]++ == 0) touched.push_back(s);
    }
  }
  struct Neighbor {
    double similarity;
    std::size_t session;
  };
  std::vector<Neighbor> neighbors;
  neighbors.reserve(touched.size());
  const auto qn = static_cast<double>(query.size());
  for (std::size_t s : touched) {
    const auto sn = static_cast<double>(sessions_[s].size());
    neighbors.push_back({static_cast<double>(overlap[s]) / std::sqrt(qn * sn), s});
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.session < b.session;
  };
  const std::size_t keep = std::min(k_neighbors_, neighbors.size());
  std::partial_sort(neighbors.begin(),
                    neighbors.begin() + static_cast<std::ptrdiff_t>(keep),
                    neighbors.end(), better);
  neighbors.resize(keep);
  // Accumulate in session order so the sum does not depend on sort internals.
  std::sort(neighbors.begin(), neighbors.end(),
            [](const Neighbor& a, const Neighbor& b) { return a.session < b.session; });
  for (const auto& nb : neighbors) {
    for (std::size_t it : sessions_[nb.session]) out[it] += nb.similarity;
  }
  return out;
}

std::vector<std::size_t> SknnRecommender::rank(
    std::span<const std::size_t> prefix, std::size_t k) const {
  const auto sc = scores(prefix);
  std::unordered_set<std::size_t> seen(prefix.begin(), prefix.end());
  std::vector<std::size_t> scored;
  for (std::size_t it = 0; it < n_items_; ++it) {
    if (sc[it] > 0.0 && !seen.contains(it)) scored.push_back(it);
  }
  std::stable_sort(scored.begin(), scored.end(), [&](std::size_t a, std::size_t b) {
    return sc[a] > sc[b];
  });
  if (scored.size() > k) scored.resize(k);
  if (scored.size() < k) {
    for (std::size_t it : popularity_.order()) {
      if (scored.size() == k) break;
      if (sc[it] == 0.0 && !seen.contains(it)) scored.push_back(it);
    }
  }
  return scored;
}

std::unique_ptr<Recommender> mostpop_baseline(std::span<const Session> train,
                                              std::size_t n_items) {
  return std::make_unique<MostPopRecommender>(train, n_items);
}

std::unique_ptr<Recommender> sknn_baseline(std::span<const Session> train,
                                           std::size_t n_items,
                                           std::size_t k_neighbors) {
  return std::make_unique<SknnRecommender>(train, n_items, k_neighbors);
}

}  // namespace duip
