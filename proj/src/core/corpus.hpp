// Copyright 2026 The Cocoon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Behavioral event logs, category labels and the item vocabulary.
//
// A corpus is the set of per-user consumption sequences. Each user plays the
// role of a document and the consumed items play the role of its words.

#ifndef COCOON_CORE_CORPUS_HPP_
#define COCOON_CORE_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cocoon {

struct Event {
  std::string user_id;
  std::int64_t timestamp = 0;
  std::string item_id;
  std::optional<std::string> category;
  std::optional<double> duration;
};

struct UserSequence {
  std::string user_id;
  // Parallel arrays, chronological. Missing durations are stored as 1.
  std::vector<std::int64_t> timestamps;
  std::vector<std::string> items;
  std::vector<double> durations;
  std::map<std::string, double> covariates;

  std::size_t length() const { return items.size(); }
};

enum class ItemClass { kUnknown, kEntertainment, kNonEntertainment };

class CategoryMap {
 public:
  void set_item(const std::string& item_id, const std::string& category);
  void set_entertainment(const std::string& category, bool entertainment);

  // Every labelled item's category carries a flag and at least one category
  // is not entertainment. Throws kSchema otherwise.
  void validate() const;

  std::optional<std::string> category_of(std::string_view item_id) const;
  ItemClass classify(std::string_view item_id) const;
  bool has_category(std::string_view category) const;
  bool is_entertainment_category(std::string_view category) const;

  const std::map<std::string, std::string, std::less<>>& items() const {
    return items_;
  }
  const std::map<std::string, bool, std::less<>>& categories() const {
    return flags_;
  }
  bool empty() const { return items_.empty() && flags_.empty(); }

 private:
  std::map<std::string, std::string, std::less<>> items_;
  std::map<std::string, bool, std::less<>> flags_;
};

struct Corpus {
  // Sorted by user_id.
  std::vector<UserSequence> users;
  CategoryMap category_map;
  // item -> category as seen in the event log's optional category column.
  std::map<std::string, std::string, std::less<>> log_categories;

  std::size_t event_count() const;
  const UserSequence* find_user(std::string_view user_id) const;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> items, std::vector<std::uint64_t> counts);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::string& item(std::size_t index) const { return items_[index]; }
  std::uint64_t count(std::size_t index) const { return counts_[index]; }
  const std::vector<std::string>& items() const { return items_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::optional<std::size_t> index_of(std::string_view item_id) const;

 private:
  std::vector<std::string> items_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class EventFormat { kCsv, kJsonl };

// Groups events by user (sorted by user_id) and orders each sequence by
// timestamp, keeping file order on ties.
Corpus parse_event_log(std::istream& in, EventFormat format);
Corpus corpus_from_events(const std::vector<Event>& events);
EventFormat guess_event_format(std::string_view path);

// Items are ordered by descending count, then by id.
Vocabulary build_vocabulary(const Corpus& corpus, std::uint64_t min_count);

// One stream holding an `item_id,category` section followed by a
// `category,is_entertainment` section, each introduced by its header line.
CategoryMap load_category_map(std::istream& in);
CategoryMap load_category_map(std::istream& items, std::istream& flags);
void write_category_map(const CategoryMap& map, std::ostream& out);

// Installs `map`, adding log-derived labels for items the map does not
// mention. Throws kSchema if a log category has no entertainment flag.
void attach_category_map(Corpus& corpus, CategoryMap map);

// CSV `user_id,<name>...`; empty or NA cells are skipped. Unknown users are
// ignored.
void attach_covariates(Corpus& corpus, std::istream& in);

std::vector<UserSequence> sequences_by_user(const Corpus& corpus);

// CSV with the full header; duration is always written.
void write_event_log(const Corpus& corpus, std::ostream& out);

void save_corpus(const Corpus& corpus, std::ostream& out);
Corpus load_corpus(std::istream& in);

// RFC 4180-style field split (double quotes, "" escapes).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace cocoon

#endif  // COCOON_CORE_CORPUS_HPP_
