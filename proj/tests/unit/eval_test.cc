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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "duip/data.h"
#include "duip/errors.h"
#include "duip/eval.h"
#include "duip/rng.h"
#include "recommenders.h"

namespace duip {
namespace {

using testing::RandomRecommender;
using testing::TableRecommender;

std::vector<Session> sessions_of(std::vector<std::vector<std::size_t>> items) {
  std::vector<Session> out;
  for (std::size_t s = 0; s < items.size(); ++s) {
    out.push_back({"u" + std::to_string(s), std::move(items[s]),
                   static_cast<std::int64_t>(s)});
  }
  return out;
}

TEST(HitRateTest, Examples) {
  const std::vector<std::size_t> ranked = {7, 4, 9, 1, 2, 0};
  EXPECT_EQ(hit_rate_at_k(ranked, 7, 1), 1);
  EXPECT_EQ(hit_rate_at_k(ranked, 9, 1), 0);
  EXPECT_EQ(hit_rate_at_k(ranked, 9, 5), 1);
  for (std::size_t k = 1; k <= 6; ++k) EXPECT_EQ(hit_rate_at_k(ranked, 3, k), 0);
  EXPECT_THROW(hit_rate_at_k(ranked, 7, 7), DomainError);
  EXPECT_THROW(hit_rate_at_k(ranked, 7, 0), DomainError);
}

TEST(NdcgTest, Examples) {
  const std::vector<std::size_t> ranked = {0, 1, 2, 3, 4, 5, 6};
  EXPECT_EQ(ndcg_at_k(ranked, 0, 5), 1.0);
  EXPECT_EQ(ndcg_at_k(ranked, 2, 5), 0.5);
  EXPECT_EQ(ndcg_at_k(ranked, 6, 5), 0.0);
  EXPECT_THROW(ndcg_at_k(ranked, 0, 8), DomainError);
}

TEST(MetricsTest, InvariantsOnRandomRankings) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<std::size_t> ranked(n);
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    rng.shuffle(ranked);
    const std::size_t target = rng.below(n + 3);
    EXPECT_EQ(ndcg_at_k(ranked, target, 1), static_cast<double>(hit_rate_at_k(ranked, target, 1)));
    for (std::size_t k = 1; k < n; ++k) {
      EXPECT_LE(hit_rate_at_k(ranked, target, k), hit_rate_at_k(ranked, target, k + 1));
      EXPECT_LE(ndcg_at_k(ranked, target, k), ndcg_at_k(ranked, target, k + 1));
      EXPECT_LE(ndcg_at_k(ranked, target, k), hit_rate_at_k(ranked, target, k));
    }
  }
}

TEST(EvaluateTest, OracleScoresOne) {
  const auto test = sessions_of({{0, 1, 2}, {3, 1}});
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> table;
  for (const auto& ex : make_examples(test)) table[ex.prefix] = {ex.target};
  const TableRecommender oracle(6, table);
  const auto r = evaluate(oracle, test);
  EXPECT_EQ(r.n_examples, 3u);
  for (std::size_t k : {1u, 5u}) {
    EXPECT_EQ(r.hr.at(k), 1.0);
    EXPECT_EQ(r.ndcg.at(k), 1.0);
  }
}

TEST(EvaluateTest, AdversaryScoresZero) {
  const auto test = sessions_of({{0, 9}, {1, 9}});
  const TableRecommender adversary(10, {});
  const auto r = evaluate(adversary, test);
  for (std::size_t k : {1u, 5u}) {
    EXPECT_EQ(r.hr.at(k), 0.0);
    EXPECT_EQ(r.ndcg.at(k), 0.0);
  }
}

TEST(EvaluateTest, RanksOneAndThree) {
  const auto test = sessions_of({{0, 4}, {1, 5}});
  const TableRecommender rec(8, {{{0}, {4}}, {{1}, {6, 7, 5}}});
  const auto r = evaluate(rec, test);
  EXPECT_EQ(r.hr.at(5), 1.0);
  EXPECT_EQ(r.ndcg.at(5), 0.75);
  EXPECT_EQ(r.hr.at(1), 0.5);
  EXPECT_EQ(r.ndcg.at(1), 0.5);
}

TEST(EvaluateTest, UnknownTargetsCountAsMisses) {
  // Token 10 stands for UNK in a 10-item catalog.
  const auto test = sessions_of({{0, 10}, {1, 2}});
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> table = {{{1}, {2}}};
  const TableRecommender rec(10, table);
  const auto r = evaluate(rec, test);
  EXPECT_EQ(r.n_examples, 2u);
  EXPECT_EQ(r.hr.at(1), 0.5);
}

TEST(EvaluateTest, NoExamples) {
  const TableRecommender rec(3, {});
  const auto test = sessions_of({{0}, {1}});
  EXPECT_THROW(evaluate(rec, test), DomainError);
}

TEST(EvaluateTest, ThreadCountDoesNotChangeResult) {
  Rng rng(2);
  std::vector<std::vector<std::size_t>> items(60);
  for (auto& s : items) {
    s.resize(2 + rng.below(6));
    for (auto& x : s) x = rng.below(20);
  }
  const auto train = sessions_of(items);
  const SknnRecommender sknn(train, 20);
  const auto one = evaluate(sknn, train, kDefaultCutoffs, "sknn", 1);
  const auto four = evaluate(sknn, train, kDefaultCutoffs, "sknn", 4);
  EXPECT_EQ(one, four);
}

TEST(EvaluateTest, RandomRecommenderCalibration) {
  const RandomRecommender rec(100, 3);
  std::vector<Example> examples(10000);
  Rng rng(4);
  for (auto& ex : examples) {
    ex.prefix = {rng.below(100)};
    ex.target = rng.below(100);
  }
  const std::vector<std::size_t> ks = {5};
  const auto r = evaluate_examples(rec, examples, ks);
  EXPECT_NEAR(r.hr.at(5), 0.05, 0.01);
}

TEST(CompareTest, RowsPerModel) {
  const auto test = sessions_of({{0, 1, 2}, {2, 1}});
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> table;
  for (const auto& ex : make_examples(test)) table[ex.prefix] = {ex.target};
  const TableRecommender oracle(3, table);
  const std::vector<NamedRecommender> models = {{"oracle", &oracle}, {"again", &oracle}};
  const auto rows = compare(models, test);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].model_name, "oracle");
  EXPECT_EQ(rows[0].hr, rows[1].hr);
  EXPECT_EQ(rows[0].ndcg, rows[1].ndcg);
  EXPECT_EQ(rows[0].hr.at(1), 1.0);
  EXPECT_THROW(compare(std::span<const NamedRecommender>(), test), DomainError);
}

TEST(ReportFormatTest, CsvAndTable) {
  MetricsReport r;
  r.model_name = "mostpop";
  r.hr = {{1, 0.25}, {5, 0.5}};
  r.ndcg = {{1, 0.25}, {5, 0.375}};
  r.n_examples = 8;
  const std::vector<MetricsReport> rows = {r};
  EXPECT_EQ(metrics_csv(rows),
            "model,hr@1,hr@5,ndcg@1,ndcg@5,n\n"
            "mostpop,0.250000,0.500000,0.250000,0.375000,8\n");
  const auto table = metrics_table(rows);
  EXPECT_NE(table.find("HR@1"), std::string::npos);
  EXPECT_NE(table.find("0.3750"), std::string::npos);
}

TEST(MostPopTest, OrderTiesAndExclusion) {
  // a=0 five times, b=1 three times, c=2 once.
  const auto train = sessions_of({{0, 0, 1}, {0, 1, 0}, {0, 1, 2}});
  const MostPopRecommender mp(train, 3);
  EXPECT_EQ(mp.rank(std::vector<std::size_t>{}, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(mp.rank(std::vector<std::size_t>{0}, 2), (std::vector<std::size_t>{1, 2}));
  const auto tied = sessions_of({{1, 0}, {0, 1}});
  const MostPopRecommender mp2(tied, 2);
  EXPECT_EQ(mp2.rank(std::vector<std::size_t>{}, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(MostPopTest, ReturnsFewerWhenCatalogExhausted) {
  const auto train = sessions_of({{0, 1}});
  const MostPopRecommender mp(train, 2);
  EXPECT_EQ(mp.rank(std::vector<std::size_t>{0}, 5), (std::vector<std::size_t>{1}));
}

// Cosine over binary sets, top-k neighbours by (similarity desc, index asc).
std::vector<double> brute_force_sknn(const std::vector<Session>& train,
                                     std::span<const std::size_t> prefix,
                                     std::size_t n_items, std::size_t k) {
  const std::set<std::size_t> q(prefix.begin(), prefix.end());
  std::vector<std::pair<double, std::size_t>> sims;
  for (std::size_t s = 0; s < train.size(); ++s) {
    const std::set<std::size_t> t(train[s].items.begin(), train[s].items.end());
    std::size_t common = 0;
    for (std::size_t x : q) common += t.count(x);
    if (common == 0) continue;
    sims.push_back({common / std::sqrt(static_cast<double>(q.size() * t.size())), s});
  }
  std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (sims.size() > k) sims.resize(k);
  std::vector<double> scores(n_items, 0.0);
  for (const auto& [sim, s] : sims) {
    const std::set<std::size_t> t(train[s].items.begin(), train[s].items.end());
    for (std::size_t x : t) scores[x] += sim;
  }
  return scores;
}

TEST(SknnTest, IdenticalSessionDominates) {
  const auto train = sessions_of({{0, 1}, {2, 3}, {0, 4}});
  const SknnRecommender sknn(train, 5);
  const std::vector<std::size_t> query = {0, 1};
  const auto scores = sknn.scores(query);
  EXPECT_DOUBLE_EQ(scores[1], 1.0);
  EXPECT_DOUBLE_EQ(scores[4], 0.5);
  EXPECT_EQ(sknn.rank(query, 2), (std::vector<std::size_t>{4, 2}));
}

TEST(SknnTest, NoOverlapFallsBackToPopularity) {
  const auto train = sessions_of({{0, 1}, {1, 2}, {1, 3}});
  const SknnRecommender sknn(train, 5);
  const MostPopRecommender mp(train, 5);
  const std::vector<std::size_t> query = {4};
  EXPECT_EQ(sknn.rank(query, 3), mp.rank(query, 3));
}

TEST(SknnTest, HandComputedWithTwoNeighbours) {
  // Query {0,1}. Sessions: {0,1,2} sim 2/sqrt6, {0,3} sim 1/2, {1,4,5,6} sim
  // 1/sqrt8. With k=2 the last one is dropped.
  const auto train = sessions_of({{0, 1, 2}, {0, 3}, {1, 4, 5, 6}});
  const SknnRecommender sknn(train, 7, 2);
  const std::vector<std::size_t> query = {0, 1};
  const auto scores = sknn.scores(query);
  const double s1 = 2.0 / std::sqrt(6.0);
  EXPECT_DOUBLE_EQ(scores[2], s1);
  EXPECT_DOUBLE_EQ(scores[3], 0.5);
  EXPECT_DOUBLE_EQ(scores[0], s1 + 0.5);
  EXPECT_EQ(scores[4], 0.0);
}

TEST(SknnTest, MatchesBruteForce) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_items = 3 + rng.below(15);
    std::vector<std::vector<std::size_t>> items(1 + rng.below(20));
    for (auto& s : items) {
      s.resize(1 + rng.below(6));
      for (auto& x : s) x = rng.below(n_items);
    }
    const auto train = sessions_of(items);
    const std::size_t k = 1 + rng.below(8);
    const SknnRecommender sknn(train, n_items, k);
    std::vector<std::size_t> prefix(1 + rng.below(4));
    for (auto& x : prefix) x = rng.below(n_items);
    const auto expect = brute_force_sknn(train, prefix, n_items, k);
    const auto got = sknn.scores(prefix);
    for (std::size_t i = 0; i < n_items; ++i) EXPECT_NEAR(got[i], expect[i], 1e-12);

    const auto ranked = sknn.rank(prefix, n_items);
    const std::set<std::size_t> seen(prefix.begin(), prefix.end());
    EXPECT_EQ(ranked.size(), n_items - seen.size());
    EXPECT_EQ(std::set<std::size_t>(ranked.begin(), ranked.end()).size(), ranked.size());
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      EXPECT_FALSE(seen.contains(ranked[r]));
      if (r > 0) {
        EXPECT_GE(got[ranked[r - 1]], got[ranked[r]]);
      }
    }
  }
}

TEST(SknnTest, RejectsEmptyTraining) {
  EXPECT_THROW(SknnRecommender(std::vector<Session>{}, 3), DomainError);
}

}  // namespace
}  // namespace duip
