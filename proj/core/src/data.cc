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

#include "duip/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "duip/errors.h"

namespace duip {
namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::vector<std::string_view> split(std::string_view line,
                                    std::string_view delim) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// Returns an error description, or an empty string on success.
std::string parse_tsv_line(std::string_view line, InteractionEvent& ev) {
  const auto f = split(line, "\t");
  if (f.size() < 3 || f.size() > 5) {
    return "expected 3 to 5 tab-separated fields, got " +
           std::to_string(f.size());
  }
  ev.user_id = std::string(trim(f[0]));
  ev.item_id = std::string(trim(f[1]));
  if (ev.item_id.empty()) return "empty item id";
  if (!parse_int(f[2], ev.timestamp) || ev.timestamp < 0) {
    return "bad timestamp '" + std::string(f[2]) + "'";
  }
  if (f.size() >= 4 && !trim(f[3]).empty()) {
    double r = 0.0;
    if (!parse_double(f[3], r)) return "bad rating '" + std::string(f[3]) + "'";
    ev.rating = r;
  }
  if (f.size() == 5 && !trim(f[4]).empty()) {
    ev.session_id = std::string(trim(f[4]));
  }
  return {};
}

std::string parse_movielens_line(std::string_view line, InteractionEvent& ev) {
  const auto f = split(line, "::");
  if (f.size() != 4) {
    return "expected UserID::MovieID::Rating::Timestamp, got " +
           std::to_string(f.size()) + " fields";
  }
  ev.user_id = std::string(trim(f[0]));
  ev.item_id = std::string(trim(f[1]));
  if (ev.item_id.empty()) return "empty movie id";
  double r = 0.0;
  if (!parse_double(f[2], r)) return "bad rating '" + std::string(f[2]) + "'";
  ev.rating = r;
  if (!parse_int(f[3], ev.timestamp) || ev.timestamp < 0) {
    return "bad timestamp '" + std::string(f[3]) + "'";
  }
  return {};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::int64_t utc_day(std::int64_t ts) {
  // Timestamps are nonnegative, so integer division is a floor.
  return ts / kSecondsPerDay;
}

}  // namespace

InputFormat parse_input_format(std::string_view name) {
  if (name == "tsv") return InputFormat::kTsv;
  if (name == "movielens-dat") return InputFormat::kMovieLensDat;
  throw ConfigError("unknown input format '" + std::string(name) +
                    "' (expected tsv or movielens-dat)");
}

SessionPolicy parse_session_policy(std::string_view name) {
  if (name == "daily") return SessionPolicy::kDaily;
  if (name == "pre-sessionized") return SessionPolicy::kPreSessionized;
  throw ConfigError("unknown session policy '" + std::string(name) +
                    "' (expected daily or pre-sessionized)");
}

InteractionLog parse_interactions(std::string_view text, InputFormat format,
                                  std::size_t max_malformed) {
  InteractionLog log;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (format == InputFormat::kTsv && line.front() == '#') continue;

    InteractionEvent ev;
    const std::string err = format == InputFormat::kTsv
                                ? parse_tsv_line(line, ev)
                                : parse_movielens_line(line, ev);
    if (!err.empty()) {
      ++log.malformed_lines;
      if (log.malformed_lines > max_malformed) {
        throw ParseError(line_no, err + " (" +
                                      std::to_string(log.malformed_lines) +
                                      " malformed lines, tolerance " +
                                      std::to_string(max_malformed) + ")");
      }
      continue;
    }
    log.events.push_back(std::move(ev));
  }
  return log;
}

InteractionLog load_interactions(const std::filesystem::path& path,
                                 InputFormat format,
                                 std::size_t max_malformed) {
  return parse_interactions(read_file(path), format, max_malformed);
}

std::vector<RawSession> sessionize(std::span<const InteractionEvent> events,
                                   SessionPolicy policy) {
  // Group key -> position in `groups`; groups keep input order of events.
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    std::string key;
    if (policy == SessionPolicy::kPreSessionized && ev.session_id) {
      key = "s\x1f" + *ev.session_id;
    } else {
      key = "d\x1f" + ev.user_id + "\x1f" + std::to_string(utc_day(ev.timestamp));
    }
    auto [it, inserted] = slot.try_emplace(std::move(key), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  std::vector<RawSession> sessions;
  sessions.reserve(groups.size());
  for (auto& g : groups) {
    std::stable_sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
      return events[a].timestamp < events[b].timestamp;
    });
    RawSession s;
    s.user_id = events[g.front()].user_id;
    s.start_time = events[g.front()].timestamp;
    s.items.reserve(g.size());
    for (std::size_t i : g) s.items.push_back(events[i].item_id);
    sessions.push_back(std::move(s));
  }
  return sessions;
}

CategoryTable parse_category_table(std::string_view text) {
  CategoryTable table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, "\t");
    if (f.size() != 2 || trim(f[0]).empty() || trim(f[1]).empty()) {
      throw ParseError(line_no, "expected 'item_id<TAB>category'");
    }
    table[std::string(trim(f[0]))] = std::string(trim(f[1]));
  }
  return table;
}

CategoryTable load_category_table(const std::filesystem::path& path) {
  return parse_category_table(read_file(path));
}

ItemIndex ItemVocab::add(const std::string& item_id) {
  if (item_id.empty()) throw DomainError("item id must be nonempty");
  if (has_categories()) {
    throw StateError("cannot add items after categories are attached");
  }
  auto [it, inserted] = index_.try_emplace(item_id, ids_.size());
  if (inserted) ids_.push_back(item_id);
  return it->second;
}

std::optional<ItemIndex> ItemVocab::find(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ItemIndex ItemVocab::index_or_unk(std::string_view item_id) const {
  return find(item_id).value_or(unk());
}

const std::string& ItemVocab::id_of(ItemIndex index) const {
  if (index >= ids_.size()) {
    throw IndexError("item index " + std::to_string(index) +
                     " outside vocabulary of " + std::to_string(ids_.size()));
  }
  return ids_[index];
}

void ItemVocab::attach_categories(const CategoryTable& table) {
  std::set<std::string> names;
  for (const auto& id : ids_) {
    if (auto it = table.find(id); it != table.end()) names.insert(it->second);
  }
  category_names_.assign(1, "<none>");
  category_names_.insert(category_names_.end(), names.begin(), names.end());
  std::map<std::string, std::size_t> by_name;
  for (std::size_t c = 1; c < category_names_.size(); ++c) {
    by_name[category_names_[c]] = c;
  }
  item_category_.assign(ids_.size(), 0);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (auto it = table.find(ids_[i]); it != table.end()) {
      item_category_[i] = by_name.at(it->second);
    }
  }
}

std::size_t ItemVocab::category_of(std::size_t token) const {
  if (token < item_category_.size()) return item_category_[token];
  return 0;
}

std::string ItemVocab::to_json() const {
  nlohmann::json j;
  j["items"] = ids_;
  j["categories"] = category_names_;
  j["item_category"] = item_category_;
  return j.dump();
}

ItemVocab ItemVocab::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  ItemVocab v;
  for (const auto& id : j.at("items")) v.add(id.get<std::string>());
  v.category_names_ = j.at("categories").get<std::vector<std::string>>();
  v.item_category_ = j.at("item_category").get<std::vector<std::size_t>>();
  if (!v.category_names_.empty() && v.item_category_.size() != v.ids_.size()) {
    throw ConfigError("vocabulary category table does not cover every item");
  }
  return v;
}

SplitDataset chronological_split(std::span<const RawSession> sessions,
                                 const SplitFractions& fractions,
                                 const CategoryTable* categories) {
  if (sessions.size() < 10) {
    throw DomainError("chronological split needs at least 10 sessions, got " +
                      std::to_string(sessions.size()));
  }
  const double total = fractions.train + fractions.valid + fractions.test;
  if (fractions.train <= 0 || fractions.valid < 0 || fractions.test < 0 ||
      std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be nonnegative and sum to 1");
  }

  std::vector<std::size_t> order(sessions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sessions[a].start_time < sessions[b].start_time;
  });

  const auto n = static_cast<double>(sessions.size());
  // The small slack keeps e.g. 0.7 * 10 from flooring to 6.
  const auto n_train = static_cast<std::size_t>(std::floor(n * fractions.train + 1e-9));
  const auto n_valid = static_cast<std::size_t>(std::floor(n * fractions.valid + 1e-9));

  SplitDataset out;
  std::unordered_set<std::string> distinct;
  for (std::size_t r = 0; r < n_train; ++r) {
    for (const auto& id : sessions[order[r]].items) out.vocab.add(id);
  }
  if (categories != nullptr) out.vocab.attach_categories(*categories);

  for (std::size_t r = 0; r < order.size(); ++r) {
    const RawSession& raw = sessions[order[r]];
    Session s;
    s.user_id = raw.user_id;
    s.start_time = raw.start_time;
    s.items.reserve(raw.items.size());
    for (const auto& id : raw.items) {
      s.items.push_back(out.vocab.index_or_unk(id));
      distinct.insert(id);
    }
    if (r < n_train) {
      out.train.push_back(std::move(s));
    } else if (r < n_train + n_valid) {
      out.valid.push_back(std::move(s));
    } else {
      out.test.push_back(std::move(s));
    }
  }
  out.n_distinct_items = distinct.size();
  return out;
}

std::string DatasetStats::to_json() const {
  nlohmann::ordered_json j;
  j["n_items"] = n_items;
  j["n_sessions"] = n_sessions;
  j["avg_session_length"] = avg_session_length;
  j["density"] = density;
  return j.dump();
}

namespace {

DatasetStats make_stats(std::size_t n_items, std::size_t n_sessions,
                        std::size_t n_events) {
  DatasetStats st;
  st.n_items = n_items;
  st.n_sessions = n_sessions;
  st.avg_session_length =
      n_sessions == 0 ? 0.0
                      : static_cast<double>(n_events) / static_cast<double>(n_sessions);
  st.density = n_items == 0
                   ? 0.0
                   : static_cast<double>(n_events) / static_cast<double>(n_items);
  return st;
}

}  // namespace

DatasetStats dataset_stats(const SplitDataset& split) {
  std::size_t events = 0;
  for (const auto* part : {&split.train, &split.valid, &split.test}) {
    for (const auto& s : *part) events += s.items.size();
  }
  return make_stats(split.n_distinct_items,
                    split.train.size() + split.valid.size() + split.test.size(),
                    events);
}

DatasetStats dataset_stats(std::span<const RawSession> sessions) {
  std::unordered_set<std::string_view> distinct;
  std::size_t events = 0;
  for (const auto& s : sessions) {
    events += s.items.size();
    for (const auto& id : s.items) distinct.insert(id);
  }
  return make_stats(distinct.size(), sessions.size(), events);
}

std::vector<Example> make_examples(const Session& session,
                                   std::size_t min_prefix) {
  std::vector<Example> out;
  if (min_prefix == 0) min_prefix = 1;
  for (std::size_t t = min_prefix; t < session.items.size(); ++t) {
    Example ex;
    ex.prefix.assign(session.items.begin(), session.items.begin() + t);
    ex.target = session.items[t];
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> make_examples(std::span<const Session> sessions,
                                   std::size_t min_prefix) {
  std::vector<Example> out;
  for (const auto& s : sessions) {
    auto part = make_examples(s, min_prefix);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace duip
