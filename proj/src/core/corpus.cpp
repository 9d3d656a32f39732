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

#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace cocoon {

// ---------------------------------------------------------------------------
// CategoryMap

void CategoryMap::set_item(const std::string& item_id,
                           const std::string& category) {
  items_[item_id] = category;
}

void CategoryMap::set_entertainment(const std::string& category,
                                    bool entertainment) {
  flags_[category] = entertainment;
}

void CategoryMap::validate() const {
  for (const auto& [item, category] : items_) {
    if (!flags_.contains(category)) {
      fail(ErrorKind::kSchema, "category '", category, "' (item '", item,
           "') has no entertainment flag");
    }
  }
  const bool any_other = std::any_of(flags_.begin(), flags_.end(),
                                     [](const auto& kv) { return !kv.second; });
  if (!any_other) {
    fail(ErrorKind::kSchema,
         "category map needs at least one non-entertainment category");
  }
}

std::optional<std::string> CategoryMap::category_of(
    std::string_view item_id) const {
  auto it = items_.find(item_id);
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

ItemClass CategoryMap::classify(std::string_view item_id) const {
  auto it = items_.find(item_id);
  if (it == items_.end()) return ItemClass::kUnknown;
  auto flag = flags_.find(it->second);
  if (flag == flags_.end()) return ItemClass::kUnknown;
  return flag->second ? ItemClass::kEntertainment
                      : ItemClass::kNonEntertainment;
}

bool CategoryMap::has_category(std::string_view category) const {
  return flags_.find(category) != flags_.end();
}

bool CategoryMap::is_entertainment_category(std::string_view category) const {
  auto it = flags_.find(category);
  return it != flags_.end() && it->second;
}

// ---------------------------------------------------------------------------
// Corpus / Vocabulary

std::size_t Corpus::event_count() const {
  return std::accumulate(
      users.begin(), users.end(), std::size_t{0},
      [](std::size_t acc, const UserSequence& u) { return acc + u.length(); });
}

const UserSequence* Corpus::find_user(std::string_view user_id) const {
  auto it = std::lower_bound(
      users.begin(), users.end(), user_id,
      [](const UserSequence& u, std::string_view id) { return u.user_id < id; });
  if (it == users.end() || it->user_id != user_id) return nullptr;
  return &*it;
}

Vocabulary::Vocabulary(std::vector<std::string> items,
                       std::vector<std::uint64_t> counts)
    : items_(std::move(items)), counts_(std::move(counts)) {
  if (items_.size() != counts_.size()) {
    fail(ErrorKind::kInvalidArgument, "vocabulary items/counts size mismatch");
  }
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i], i).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate vocabulary item '",
           items_[i], "'");
    }
  }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(const Corpus& corpus, std::uint64_t min_count) {
  if (min_count == 0) {
    fail(ErrorKind::kInvalidArgument, "min_count must be positive");
  }
  if (corpus.users.empty()) {
    fail(ErrorKind::kInvalidArgument, "cannot build a vocabulary from an empty corpus");
  }
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& user : corpus.users) {
    for (const auto& item : user.items) ++freq[item];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [item, n] : freq) {
    if (n >= min_count) kept.emplace_back(item, n);
  }
  if (kept.empty()) {
    fail(ErrorKind::kDegenerate, "vocabulary is empty after applying min_count=",
         min_count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> items;
  std::vector<std::uint64_t> counts;
  items.reserve(kept.size());
  counts.reserve(kept.size());
  for (auto& [item, n] : kept) {
    items.push_back(std::move(item));
    counts.push_back(n);
  }
  return Vocabulary(std::move(items), std::move(counts));
}

std::vector<UserSequence> sequences_by_user(const Corpus& corpus) {
  std::vector<UserSequence> out = corpus.users;
  std::stable_sort(out.begin(), out.end(),
                   [](const UserSequence& a, const UserSequence& b) {
                     return a.user_id < b.user_id;
                   });
  return out;
}

// ---------------------------------------------------------------------------
// Event log parsing

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void strip_bom(std::string& line) {
  if (line.size() >= 3 && std::memcmp(line.data(), "\xEF\xBB\xBF", 3) == 0) {
    line.erase(0, 3);
  }
}

void check_event(const Event& e, std::size_t line) {
  if (e.user_id.empty()) throw ParseError(line, "empty user_id");
  if (e.item_id.empty()) throw ParseError(line, "empty item_id");
  if (e.duration && (!std::isfinite(*e.duration) || *e.duration < 0.0)) {
    throw ParseError(line, "duration must be a non-negative number");
  }
}

std::vector<Event> read_csv_events(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) strip_bom(line);
    if (!text::trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) fail(ErrorKind::kSchema, "event log has no header");

  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (text::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto c_user = column("user_id");
  const auto c_ts = column("timestamp");
  const auto c_item = column("item_id");
  for (auto [col, name] : {std::pair{c_user, "user_id"},
                           std::pair{c_ts, "timestamp"},
                           std::pair{c_item, "item_id"}}) {
    if (!col) fail(ErrorKind::kSchema, "event log is missing column '", name, "'");
  }
  const auto c_cat = column("category");
  const auto c_dur = column("duration");

  std::vector<Event> events;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                    " fields, got " + std::to_string(f.size()));
    }
    Event e;
    e.user_id = std::string(text::trim(f[*c_user]));
    e.item_id = std::string(text::trim(f[*c_item]));
    const auto ts = text::parse_int(f[*c_ts]);
    if (!ts) throw ParseError(line_no, "timestamp '" + f[*c_ts] + "' is not an integer");
    e.timestamp = *ts;
    if (c_cat && !text::trim(f[*c_cat]).empty()) {
      e.category = std::string(text::trim(f[*c_cat]));
    }
    if (c_dur && !text::trim(f[*c_dur]).empty()) {
      const auto d = text::parse_double(f[*c_dur]);
      if (!d) throw ParseError(line_no, "duration '" + f[*c_dur] + "' is not a number");
      e.duration = *d;
    }
    check_event(e, line_no);
    events.push_back(std::move(e));
  }
  return events;
}

std::string json_id(const nlohmann::json& v, std::size_t line, const char* key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw ParseError(line, std::string(key) + " must be a string");
}

std::vector<Event> read_jsonl_events(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<Event> events;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) strip_bom(line);
    if (text::trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
    for (const char* key : {"user_id", "timestamp", "item_id"}) {
      if (!obj.contains(key)) {
        fail(ErrorKind::kSchema, "line ", line_no, ": missing required key '",
             key, "'");
      }
    }
    Event e;
    e.user_id = json_id(obj["user_id"], line_no, "user_id");
    e.item_id = json_id(obj["item_id"], line_no, "item_id");
    const auto& ts = obj["timestamp"];
    if (!ts.is_number_integer()) throw ParseError(line_no, "timestamp must be an integer");
    e.timestamp = ts.get<std::int64_t>();
    if (obj.contains("category") && !obj["category"].is_null()) {
      if (!obj["category"].is_string()) throw ParseError(line_no, "category must be a string");
      e.category = obj["category"].get<std::string>();
    }
    if (obj.contains("duration") && !obj["duration"].is_null()) {
      if (!obj["duration"].is_number()) throw ParseError(line_no, "duration must be a number");
      e.duration = obj["duration"].get<double>();
    }
    check_event(e, line_no);
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace

Corpus corpus_from_events(const std::vector<Event>& events) {
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < events.size(); ++i) {
    by_user[events[i].user_id].push_back(i);
  }
  Corpus corpus;
  corpus.users.reserve(by_user.size());
  for (auto& [user_id, rows] : by_user) {
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return events[a].timestamp < events[b].timestamp;
    });
    UserSequence seq;
    seq.user_id = user_id;
    seq.timestamps.reserve(rows.size());
    seq.items.reserve(rows.size());
    seq.durations.reserve(rows.size());
    for (std::size_t r : rows) {
      seq.timestamps.push_back(events[r].timestamp);
      seq.items.push_back(events[r].item_id);
      seq.durations.push_back(events[r].duration.value_or(1.0));
    }
    corpus.users.push_back(std::move(seq));
  }
  for (const auto& e : events) {
    if (e.category) corpus.log_categories.emplace(e.item_id, *e.category);
  }
  return corpus;
}

Corpus parse_event_log(std::istream& in, EventFormat format) {
  const auto events =
      format == EventFormat::kCsv ? read_csv_events(in) : read_jsonl_events(in);
  return corpus_from_events(events);
}

EventFormat guess_event_format(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.substr(path.size() - suffix.size()) == suffix;
  };
  return ends_with(".jsonl") || ends_with(".json") ? EventFormat::kJsonl
                                                   : EventFormat::kCsv;
}

// ---------------------------------------------------------------------------
// Category map

namespace {

enum class Section { kNone, kItems, kFlags };

Section header_section(const std::vector<std::string>& f) {
  if (f.size() != 2) return Section::kNone;
  const auto a = text::trim(f[0]);
  const auto b = text::trim(f[1]);
  if (a == "item_id" && b == "category") return Section::kItems;
  if (a == "category" && b == "is_entertainment") return Section::kFlags;
  return Section::kNone;
}

void read_category_rows(std::istream& in, CategoryMap& map, Section forced) {
  std::string line;
  std::size_t line_no = 0;
  Section section = forced;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) strip_bom(line);
    if (text::trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    const auto hs = header_section(f);
    if (hs != Section::kNone) {
      if (forced != Section::kNone && hs != forced) {
        throw ParseError(line_no, "unexpected section header");
      }
      section = hs;
      continue;
    }
    if (section == Section::kNone) {
      fail(ErrorKind::kSchema, "line ", line_no,
           ": expected header 'item_id,category' or 'category,is_entertainment'");
    }
    if (f.size() != 2) throw ParseError(line_no, "expected 2 fields");
    const std::string a(text::trim(f[0]));
    const std::string b(text::trim(f[1]));
    if (a.empty() || b.empty()) throw ParseError(line_no, "empty field");
    if (section == Section::kItems) {
      map.set_item(a, b);
    } else {
      const auto flag = text::parse_bool(b);
      if (!flag) throw ParseError(line_no, "is_entertainment '" + b + "' is not a boolean");
      map.set_entertainment(a, *flag);
    }
  }
}

}  // namespace

CategoryMap load_category_map(std::istream& in) {
  CategoryMap map;
  read_category_rows(in, map, Section::kNone);
  map.validate();
  return map;
}

CategoryMap load_category_map(std::istream& items, std::istream& flags) {
  CategoryMap map;
  read_category_rows(items, map, Section::kItems);
  read_category_rows(flags, map, Section::kFlags);
  map.validate();
  return map;
}

void write_category_map(const CategoryMap& map, std::ostream& out) {
  out << "item_id,category\n";
  for (const auto& [item, category] : map.items()) {
    out << csv_escape(item) << ',' << csv_escape(category) << '\n';
  }
  out << "category,is_entertainment\n";
  for (const auto& [category, flag] : map.categories()) {
    out << csv_escape(category) << ',' << (flag ? "true" : "false") << '\n';
  }
}

void attach_category_map(Corpus& corpus, CategoryMap map) {
  for (const auto& [item, category] : corpus.log_categories) {
    if (map.category_of(item)) continue;
    if (!map.has_category(category)) {
      fail(ErrorKind::kSchema, "category '", category, "' (from event log, item '",
           item, "') has no entertainment flag");
    }
    map.set_item(item, category);
  }
  map.validate();
  corpus.category_map = std::move(map);
}

void attach_covariates(Corpus& corpus, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) strip_bom(line);
    if (!text::trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty() || text::trim(header[0]) != "user_id") {
    fail(ErrorKind::kSchema, "covariate file must start with a 'user_id' column");
  }
  for (auto& h : header) h = std::string(text::trim(h));
  std::unordered_map<std::string, UserSequence*> index;
  for (auto& u : corpus.users) index.emplace(u.user_id, &u);
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw ParseError(line_no, "wrong field count");
    auto it = index.find(std::string(text::trim(f[0])));
    if (it == index.end()) continue;
    for (std::size_t c = 1; c < f.size(); ++c) {
      if (text::is_missing(f[c])) continue;
      const auto v = text::parse_double(f[c]);
      if (!v) {
        throw ParseError(line_no, "covariate '" + header[c] + "' value '" + f[c] +
                                      "' is not numeric");
      }
      it->second->covariates[header[c]] = *v;
    }
  }
}

void write_event_log(const Corpus& corpus, std::ostream& out) {
  out << "user_id,timestamp,item_id,category,duration\n";
  for (const auto& u : corpus.users) {
    for (std::size_t i = 0; i < u.length(); ++i) {
      auto cat = corpus.category_map.category_of(u.items[i]);
      if (!cat) {
        auto it = corpus.log_categories.find(u.items[i]);
        if (it != corpus.log_categories.end()) cat = it->second;
      }
      out << csv_escape(u.user_id) << ',' << u.timestamps[i] << ','
          << csv_escape(u.items[i]) << ',' << csv_escape(cat.value_or("")) << ','
          << text::format_double(u.durations[i]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Binary snapshot: little-endian, length-prefixed strings.

namespace {

constexpr char kMagic[8] = {'C', 'O', 'C', 'O', 'O', 'N', 'C', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, 8);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(std::string_view s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::uint64_t u64() {
    unsigned char b[8];
    in_.read(reinterpret_cast<char*>(b), 8);
    if (!in_) fail(ErrorKind::kParse, "corpus snapshot is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    const auto bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::size_t count() {
    const auto n = u64();
    if (n > (std::uint64_t{1} << 40)) fail(ErrorKind::kParse, "corpus snapshot is corrupt");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    std::string s(count(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) fail(ErrorKind::kParse, "corpus snapshot is truncated");
    return s;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_corpus(const Corpus& corpus, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  Writer w(out);
  w.u64(corpus.users.size());
  for (const auto& u : corpus.users) {
    w.str(u.user_id);
    w.u64(u.length());
    for (std::size_t i = 0; i < u.length(); ++i) {
      w.i64(u.timestamps[i]);
      w.str(u.items[i]);
      w.f64(u.durations[i]);
    }
    w.u64(u.covariates.size());
    for (const auto& [name, value] : u.covariates) {
      w.str(name);
      w.f64(value);
    }
  }
  const auto& items = corpus.category_map.items();
  w.u64(items.size());
  for (const auto& [item, category] : items) {
    w.str(item);
    w.str(category);
  }
  const auto& flags = corpus.category_map.categories();
  w.u64(flags.size());
  for (const auto& [category, flag] : flags) {
    w.str(category);
    w.u64(flag ? 1 : 0);
  }
  w.u64(corpus.log_categories.size());
  for (const auto& [item, category] : corpus.log_categories) {
    w.str(item);
    w.str(category);
  }
  if (!out) fail(ErrorKind::kIo, "failed writing corpus snapshot");
}

Corpus load_corpus(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    fail(ErrorKind::kParse, "not a corpus snapshot (bad magic)");
  }
  Reader r(in);
  Corpus corpus;
  corpus.users.resize(r.count());
  for (auto& u : corpus.users) {
    u.user_id = r.str();
    const auto n = r.count();
    u.timestamps.resize(n);
    u.items.resize(n);
    u.durations.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      u.timestamps[i] = r.i64();
      u.items[i] = r.str();
      u.durations[i] = r.f64();
    }
    const auto nc = r.count();
    for (std::size_t i = 0; i < nc; ++i) {
      auto name = r.str();
      u.covariates[name] = r.f64();
    }
  }
  const auto n_items = r.count();
  for (std::size_t i = 0; i < n_items; ++i) {
    auto item = r.str();
    corpus.category_map.set_item(item, r.str());
  }
  const auto n_flags = r.count();
  for (std::size_t i = 0; i < n_flags; ++i) {
    auto category = r.str();
    corpus.category_map.set_entertainment(category, r.u64() != 0);
  }
  const auto n_log = r.count();
  for (std::size_t i = 0; i < n_log; ++i) {
    auto item = r.str();
    corpus.log_categories.emplace(item, r.str());
  }
  return corpus;
}

}  // namespace cocoon
