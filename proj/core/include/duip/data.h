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

// Interaction logs -> sessions -> chronological split -> training examples.

#ifndef DUIP_DATA_H_
#define DUIP_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace duip {

using ItemIndex = std::size_t;

struct InteractionEvent {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::optional<double> rating;
  std::optional<std::string> session_id;
};

enum class InputFormat { kTsv, kMovieLensDat };
enum class SessionPolicy { kDaily, kPreSessionized };

InputFormat parse_input_format(std::string_view name);
SessionPolicy parse_session_policy(std::string_view name);

struct InteractionLog {
  std::vector<InteractionEvent> events;
  std::size_t malformed_lines = 0;
};

// Reads a TSV (`user item timestamp [rating] [session_id]`, '#' comment
// lines) or MovieLens `UserID::MovieID::Rating::Timestamp` file. Up to
// `max_malformed` bad lines are skipped and counted; one more raises
// ParseError naming the offending line.
InteractionLog load_interactions(const std::filesystem::path& path,
                                 InputFormat format,
                                 std::size_t max_malformed = 0);

// Same, from an in-memory buffer.
InteractionLog parse_interactions(std::string_view text, InputFormat format,
                                  std::size_t max_malformed = 0);

// A session before vocabulary mapping: raw item ids in chronological order.
struct RawSession {
  std::string user_id;
  std::vector<std::string> items;
  std::int64_t start_time = 0;
};

// Groups events into sessions. `kDaily` keys on (user, UTC day); the
// pre-sessionized policy keys on the session-id column and falls back to
// the daily key for rows without one. Events inside a session are stably
// sorted by timestamp; sessions appear in order of their first event in
// the input.
std::vector<RawSession> sessionize(std::span<const InteractionEvent> events,
                                   SessionPolicy policy);

// Optional item -> category side table.
using CategoryTable = std::unordered_map<std::string, std::string>;
CategoryTable load_category_table(const std::filesystem::path& path);
CategoryTable parse_category_table(std::string_view text);

// Bijection between item ids and dense indices [0, n_items). Special
// tokens and category tokens are numbered above the item range:
//   n_items + 0 PAD, + 1 USER, + 2 SEP, + 3 UNK, + 4 + c CAT(c)
// Category 0 is the "no category" bucket when a table is attached.
class ItemVocab {
 public:
  static constexpr std::size_t kNumSpecialTokens = 4;

  // Returns the existing index when `item_id` is already present.
  ItemIndex add(const std::string& item_id);

  std::optional<ItemIndex> find(std::string_view item_id) const;
  // Known item index, or unk() for anything outside the vocabulary.
  ItemIndex index_or_unk(std::string_view item_id) const;
  const std::string& id_of(ItemIndex index) const;

  std::size_t n_items() const { return ids_.size(); }
  bool is_item(std::size_t token) const { return token < n_items(); }

  std::size_t pad() const { return n_items(); }
  std::size_t user() const { return n_items() + 1; }
  std::size_t sep() const { return n_items() + 2; }
  std::size_t unk() const { return n_items() + 3; }

  void attach_categories(const CategoryTable& table);
  bool has_categories() const { return !category_names_.empty(); }
  std::size_t n_categories() const { return category_names_.size(); }
  const std::vector<std::string>& category_names() const {
    return category_names_;
  }
  // Category of a token; UNK and unknown items map to category 0.
  std::size_t category_of(std::size_t token) const;
  std::size_t category_token(std::size_t category) const {
    return n_items() + kNumSpecialTokens + category;
  }

  // Items, special tokens and category tokens.
  std::size_t n_tokens() const {
    return n_items() + kNumSpecialTokens + n_categories();
  }

  const std::vector<std::string>& ids() const { return ids_; }

  std::string to_json() const;
  static ItemVocab from_json(std::string_view text);

  friend bool operator==(const ItemVocab& a, const ItemVocab& b) {
    return a.ids_ == b.ids_ && a.category_names_ == b.category_names_ &&
           a.item_category_ == b.item_category_;
  }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, ItemIndex> index_;
  std::vector<std::string> category_names_;
  std::vector<std::size_t> item_category_;
};

// A session mapped to token indices. Items unseen in training map to
// ItemVocab::unk().
struct Session {
  std::string user_id;
  std::vector<std::size_t> items;
  std::int64_t start_time = 0;
};

struct SplitFractions {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct SplitDataset {
  std::vector<Session> train;
  std::vector<Session> valid;
  std::vector<Session> test;
  ItemVocab vocab;
  // Distinct raw item ids across all three splits, before UNK mapping.
  std::size_t n_distinct_items = 0;
};

// Stable sort by start_time, then floor/floor/remainder partition by session
// count. The vocabulary is built from training sessions only, in order of
// first appearance. Requires at least 10 sessions.
SplitDataset chronological_split(std::span<const RawSession> sessions,
                                 const SplitFractions& fractions = {},
                                 const CategoryTable* categories = nullptr);

struct DatasetStats {
  std::size_t n_items = 0;
  std::size_t n_sessions = 0;
  double avg_session_length = 0.0;
  // Events per item: total events / n_items.
  double density = 0.0;

  std::string to_json() const;
};

DatasetStats dataset_stats(const SplitDataset& split);
DatasetStats dataset_stats(std::span<const RawSession> sessions);

struct Example {
  std::vector<std::size_t> prefix;
  std::size_t target = 0;
};

// ([x_1..x_t], x_{t+1}) for t = min_prefix .. len - 1.
std::vector<Example> make_examples(const Session& session,
                                   std::size_t min_prefix = 1);
std::vector<Example> make_examples(std::span<const Session> sessions,
                                   std::size_t min_prefix = 1);

}  // namespace duip

#endif  // DUIP_DATA_H_
