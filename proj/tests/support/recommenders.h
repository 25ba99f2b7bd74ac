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


#ifndef DUIP_TESTS_SUPPORT_RECOMMENDERS_H_
#define DUIP_TESTS_SUPPORT_RECOMMENDERS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "duip/eval.h"
#include "duip/rng.h"

namespace duip::testing {

// Ranks items by a fixed table keyed on the prefix, falling back to index
// order.
class TableRecommender : public Recommender {
 public:
  using Table = std::map<std::vector<std::size_t>, std::vector<std::size_t>>;

  TableRecommender(std::size_t n_items, Table table)
      : n_items_(n_items), table_(std::move(table)) {}

  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

 private:
  std::size_t n_items_;
  Table table_;
};

// Uniformly random permutation per call. Not safe for concurrent use.
class RandomRecommender : public Recommender {
 public:
  RandomRecommender(std::size_t n_items, std::uint64_t seed)
      : n_items_(n_items), rng_(seed) {}

  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

 private:
  std::size_t n_items_;
  mutable Rng rng_;
};

}  // namespace duip::testing

#endif  // DUIP_TESTS_SUPPORT_RECOMMENDERS_H_
