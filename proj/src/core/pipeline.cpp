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

#include "pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "nullmodel.hpp"
#include "stats.hpp"
#include "text.hpp"

namespace cocoon {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  value = text::trim(value);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || p != value.data() + value.size()) {
    fail(ErrorKind::kInvalidArgument, "option '", key, "' expects a non-negative integer, got '",
         value, "'");
  }
  return v;
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_real(std::string_view key, std::string_view value) {
  auto v = text::parse_double(value);
  if (!v) fail(ErrorKind::kInvalidArgument, "option '", key, "' expects a number, got '", value, "'");
  return *v;
}

bool parse_flag(std::string_view key, std::string_view value) {
  auto v = text::parse_bool(value);
  if (!v) fail(ErrorKind::kInvalidArgument, "option '", key, "' expects a boolean, got '", value, "'");
  return *v;
}

std::vector<std::string> parse_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto tok = text::trim(value.substr(start, comma - start));
    if (!tok.empty()) out.emplace_back(tok);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value) {
  std::string k(text::trim(key));
  std::replace(k.begin(), k.end(), '_', '-');
  const std::string v(text::trim(value));
  if (k == "out" || k == "out-dir") {
    out_dir = v;
  } else if (k == "events") {
    events = v;
  } else if (k == "categories") {
    categories = v;
  } else if (k == "covariates") {
    covariates = v;
  } else if (k == "dim") {
    training.dim = parse_size(k, v);
  } else if (k == "epochs") {
    training.epochs = parse_size(k, v);
  } else if (k == "min-count") {
    training.min_count = parse_u64(k, v);
  } else if (k == "negative") {
    training.negative = parse_size(k, v);
  } else if (k == "window") {
    training.window = parse_size(k, v);
  } else if (k == "shrink-window") {
    training.shrink_window = parse_flag(k, v);
  } else if (k == "lr-start") {
    training.lr_start = parse_real(k, v);
  } else if (k == "lr-end") {
    training.lr_end = parse_real(k, v);
  } else if (k == "workers") {
    training.workers = parse_size(k, v);
  } else if (k == "seed") {
    seed = parse_u64(k, v);
  } else if (k == "reps") {
    reps = parse_size(k, v);
  } else if (k == "distance") {
    distance = parse_distance_metric(v);
  } else if (k == "consumed-only") {
    consumed_only = parse_flag(k, v);
  } else if (k == "dv") {
    dv = v;
  } else if (k == "iv") {
    iv = parse_list(v);
  } else if (k == "item") {
    item = v;
  } else if (k == "k") {
    this->k = parse_size(k, v);
  } else if (k == "components") {
    components = parse_size(k, v);
  } else if (k == "synth-users") {
    synth_users = parse_size(k, v);
  } else if (k == "synth-genres") {
    synth_genres = parse_size(k, v);
  } else if (k == "synth-items") {
    synth_items = parse_size(k, v);
  } else if (k == "synth-min-length") {
    synth_min_length = parse_size(k, v);
  } else if (k == "synth-max-length") {
    synth_max_length = parse_size(k, v);
  } else if (k == "synth-persistence") {
    synth_persistence = parse_real(k, v);
  } else {
    fail(ErrorKind::kInvalidArgument, "unknown option '", key, "'");
  }
}

void PipelineConfig::validate() const {
  training_config().validate();
  if (reps < 1) fail(ErrorKind::kInvalidArgument, "reps must be >= 1");
  if (out_dir.empty()) fail(ErrorKind::kInvalidArgument, "output directory is empty");
  if (k < 1) fail(ErrorKind::kInvalidArgument, "k must be >= 1");
  if (components < 1) fail(ErrorKind::kInvalidArgument, "components must be >= 1");
}

TrainingConfig PipelineConfig::training_config() const {
  TrainingConfig t = training;
  t.seed = seed;
  return t;
}

SynthParams PipelineConfig::synth_params() const {
  SynthParams p = cohort_params();
  p.n_genres = synth_genres;
  p.items_per_genre = synth_items;
  p.min_length = synth_min_length;
  p.max_length = synth_max_length;
  p.session_persistence = synth_persistence;
  p.seed = seed;
  p.groups[0].count = synth_users / 2;
  p.groups[1].count = synth_users - synth_users / 2;
  p.entertainment_genres.erase(
      std::remove_if(p.entertainment_genres.begin(), p.entertainment_genres.end(),
                     [&](std::size_t g) { return g + 1 >= synth_genres; }),
      p.entertainment_genres.end());
  p.groups[0].home_genres = p.entertainment_genres;
  return p;
}

void load_config(std::istream& in, PipelineConfig& config) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s(line);
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = text::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    try {
      config.set(s.substr(0, eq), s.substr(eq + 1));
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

void load_config_file(const fs::path& path, PipelineConfig& config) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config file '", path.string(), "'");
  try {
    load_config(in, config);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void apply_environment(PipelineConfig& config) {
  if (const char* s = std::getenv("COCOON_SEED"); s && *s) config.set("seed", s);
}

bool is_stage(std::string_view name) {
  return std::find(std::begin(kStages), std::end(kStages), name) != std::end(kStages);
}

// ---------------------------------------------------------------------------
// Stages

namespace {

class Stages {
 public:
  Stages(const PipelineConfig& config, std::ostream* log) : cfg_(config), log_(log) {}

  void synth();
  void ingest();
  void train_space();
  void metrics();
  void null_ensemble();
  void test();
  void regress();
  void report();
  void neighbors();
  void project_space();

 private:
  fs::path out(const char* name) const { return cfg_.out_dir / name; }

  // Input that an earlier stage should have produced.
  fs::path upstream(const fs::path& path, std::string_view producer) const {
    if (!fs::exists(path)) {
      fail(ErrorKind::kNotFound, "missing input '", path.string(), "' (run `", producer,
           "` first)");
    }
    return path;
  }

  std::ifstream open_in(const fs::path& path, bool binary = false) const {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) fail(ErrorKind::kIo, "cannot open '", path.string(), "'");
    return in;
  }

  // Writes through a temporary so a failed stage never leaves a partial file.
  template <typename Fn>
  void write_file(const fs::path& path, Fn&& fn, bool binary = false) const {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream o(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
      if (!o) fail(ErrorKind::kIo, "cannot write '", tmp.string(), "'");
      fn(o);
      o.flush();
      if (!o) fail(ErrorKind::kIo, "failed writing '", tmp.string(), "'");
    }
    fs::rename(tmp, path);
    note("wrote ", path.string());
  }

  template <typename... Args>
  void note(const Args&... args) const {
    if (!log_) return;
    ((*log_) << ... << args) << '\n';
  }

  Corpus load_corpus_artifact() const {
    auto in = open_in(upstream(out(artifacts::kCorpus), "ingest"), true);
    return load_corpus(in);
  }

  EmbeddingSpace load_space_artifact() const {
    auto in = open_in(upstream(out(artifacts::kSpace), "train"));
    return read_space(in);
  }

  std::vector<CocoonMetrics> load_metrics_artifact() const {
    auto in = open_in(upstream(out(artifacts::kMetrics), "metrics"));
    return read_metrics_csv(in);
  }

  const PipelineConfig& cfg_;
  std::ostream* log_;
};

void Stages::synth() {
  const auto data = generate_corpus(cfg_.synth_params());
  write_file(out(artifacts::kEvents), [&](std::ostream& o) { write_event_log(data.corpus, o); });
  write_file(out(artifacts::kGroundTruth),
             [&](std::ostream& o) { write_ground_truth(data.truth, o); });
  write_file(out(artifacts::kCategories),
             [&](std::ostream& o) { write_category_map(data.corpus.category_map, o); });
  write_file(out(artifacts::kCovariates),
             [&](std::ostream& o) { write_covariates(data.corpus, o); });
}

void Stages::ingest() {
  const fs::path events = cfg_.events.empty() ? out(artifacts::kEvents) : cfg_.events;
  auto in = open_in(upstream(events, "synth"));
  Corpus corpus = parse_event_log(in, guess_event_format(events.string()));
  note("read ", corpus.event_count(), " events for ", corpus.users.size(), " users");

  const fs::path categories =
      cfg_.categories.empty() ? out(artifacts::kCategories) : cfg_.categories;
  if (!cfg_.categories.empty() || fs::exists(categories)) {
    auto cin = open_in(upstream(categories, "synth"));
    attach_category_map(corpus, load_category_map(cin));
  }
  const fs::path covariates =
      cfg_.covariates.empty() ? out(artifacts::kCovariates) : cfg_.covariates;
  if (!cfg_.covariates.empty() || fs::exists(covariates)) {
    auto cin = open_in(upstream(covariates, "synth"));
    attach_covariates(corpus, cin);
  }
  write_file(out(artifacts::kCorpus), [&](std::ostream& o) { save_corpus(corpus, o); }, true);
}

void Stages::train_space() {
  const Corpus corpus = load_corpus_artifact();
  const EmbeddingSpace space = train(corpus, cfg_.training_config());
  write_file(out(artifacts::kSpace), [&](std::ostream& o) { write_space(space, o); });
}

void Stages::metrics() {
  const Corpus corpus = load_corpus_artifact();
  if (corpus.category_map.categories().empty()) {
    fail(ErrorKind::kNotFound, "corpus has no category map (expected '",
         (cfg_.categories.empty() ? out(artifacts::kCategories) : cfg_.categories).string(),
         "' at ingest)");
  }
  const EmbeddingSpace space = normalize_space(load_space_artifact());
  const auto rows =
      compute_cohort_metrics(corpus, space, {cfg_.distance, cfg_.consumed_only});
  write_file(out(artifacts::kMetrics), [&](std::ostream& o) { write_metrics_csv(rows, o); });
}

void Stages::null_ensemble() {
  const Corpus corpus = load_corpus_artifact();
  NullOptions opts;
  opts.repetitions = cfg_.reps;
  opts.seed = cfg_.seed;
  opts.metric = cfg_.distance;
  opts.parallel = cfg_.training.workers;
  opts.keep_spaces = false;
  const fs::path dir = cfg_.out_dir / artifacts::kNullDir;
  opts.on_repetition = [&](std::size_t r, const EmbeddingSpace& space) {
    write_file(dir / ("space_rep" + std::to_string(r) + ".tsv"),
               [&](std::ostream& o) { write_space(space, o); });
  };
  const NullEnsemble ens = build_null_ensemble(corpus, cfg_.training_config(), opts);
  if (ens.infeasible_count() > 0) {
    note(ens.infeasible_count(), " users cannot be shuffled without adjacent repeats");
  }
  write_file(dir / artifacts::kExpected, [&](std::ostream& o) { write_expected_csv(ens, o); });
}

void Stages::test() {
  const auto rows = load_metrics_artifact();
  const fs::path expected_path = cfg_.out_dir / artifacts::kNullDir / artifacts::kExpected;
  auto in = open_in(upstream(expected_path, "null"));
  const NullEnsemble ens = read_expected_csv(in);

  std::map<std::string, std::size_t> index;
  for (std::size_t u = 0; u < ens.user_ids.size(); ++u) index.emplace(ens.user_ids[u], u);
  std::vector<double> observed, expected;
  for (const auto& m : rows) {
    auto it = index.find(m.user_id);
    if (it == index.end()) {
      fail(ErrorKind::kSchema, "user '", m.user_id, "' missing from ", expected_path.string());
    }
    if (!ens.feasible[it->second]) continue;
    observed.push_back(m.radius);
    expected.push_back(ens.expected[it->second]);
  }
  const auto result = paired_cocoon_test(observed, expected);
  const auto obs = describe(observed);
  const auto exp = describe(expected);

  ordered_json j;
  j["n"] = result.n;
  j["R"] = ens.repetitions;
  j["t"] = result.t;
  j["df"] = result.df;
  j["p"] = result.p;
  j["mean_observed"] = obs.mean;
  j["mean_expected"] = exp.mean;
  j["infeasible_count"] = ens.infeasible_count();
  write_file(out(artifacts::kTest), [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  const auto bins = radius_histogram(observed, expected);
  write_file(out(artifacts::kHistogram), [&](std::ostream& o) { write_histogram_csv(bins, o); });
  note("t(", result.df, ") = ", result.t, ", p = ", result.p);
}

void Stages::regress() {
  if (cfg_.iv.empty()) fail(ErrorKind::kInvalidArgument, "no independent variables given");
  const auto rows = load_metrics_artifact();
  std::vector<std::vector<double>> cols(cfg_.iv.size());
  std::vector<double> y;
  for (const auto& m : rows) {
    auto dv = metric_value(m, cfg_.dv);
    if (!dv) continue;
    std::vector<double> xs;
    for (const auto& name : cfg_.iv) {
      auto v = metric_value(m, name);
      if (!v) break;
      xs.push_back(*v);
    }
    if (xs.size() != cfg_.iv.size()) continue;  // listwise deletion
    y.push_back(*dv);
    for (std::size_t c = 0; c < xs.size(); ++c) cols[c].push_back(xs[c]);
  }
  if (y.empty() && !rows.empty()) {
    // Distinguish an unknown column from a column that is NA everywhere.
    const auto& first = rows.front();
    auto known = [&](const std::string& name) {
      static const char* fixed[] = {"L", "r_g", "range", "dist_ent", "ent_rank",
                                    "category_count", "rel_ent_pref"};
      return std::find(std::begin(fixed), std::end(fixed), name) != std::end(fixed) ||
             first.covariates.contains(name);
    };
    if (!known(cfg_.dv)) fail(ErrorKind::kInvalidArgument, "unknown column '", cfg_.dv, "'");
    for (const auto& name : cfg_.iv) {
      if (!known(name)) fail(ErrorKind::kInvalidArgument, "unknown column '", name, "'");
    }
  }
  Matrix x(y.size(), cfg_.iv.size());
  for (std::size_t r = 0; r < y.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) x(r, c) = cols[c][r];
  }
  note("regressing ", cfg_.dv, " on ", cfg_.iv.size(), " predictors, N = ", y.size(),
       " of ", rows.size());
  const auto fit = ols_fit(x, y, cfg_.iv);
  write_file(out(artifacts::kRegression), [&](std::ostream& o) { write_regression_csv(fit, o); });
}

void Stages::report() {
  const auto rows = load_metrics_artifact();
  ordered_json summary;
  summary["users"] = rows.size();

  ordered_json metrics_json = ordered_json::object();
  for (const char* column : {"L", "r_g", "range", "dist_ent", "category_count", "rel_ent_pref"}) {
    std::vector<double> values;
    for (const auto& m : rows) {
      if (auto v = metric_value(m, column)) values.push_back(*v);
    }
    ordered_json c;
    c["n"] = values.size();
    if (!values.empty()) {
      const auto d = describe(values);
      c["mean"] = d.mean;
      c["sd"] = d.sd ? ordered_json(*d.sd) : ordered_json(nullptr);
      c["min"] = *std::min_element(values.begin(), values.end());
      c["max"] = *std::max_element(values.begin(), values.end());
    }
    metrics_json[column] = std::move(c);
  }
  summary["metrics"] = std::move(metrics_json);

  {
    auto in = open_in(upstream(out(artifacts::kTest), "test"));
    summary["cocoon_test"] = ordered_json::parse(in);
  }
  {
    auto in = open_in(upstream(out(artifacts::kRegression), "regress"));
    std::string line;
    std::getline(in, line);
    const auto header = split_csv_line(line);
    ordered_json table = ordered_json::array();
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      ordered_json row;
      for (std::size_t c = 0; c < header.size() && c < f.size(); ++c) {
        auto num = text::parse_double(f[c]);
        row[header[c]] = num && header[c] != "variable" && header[c] != "stars"
                             ? ordered_json(*num)
                             : ordered_json(f[c]);
      }
      table.push_back(std::move(row));
    }
    summary["regression"] = std::move(table);
  }
  ordered_json cfg;
  cfg["dim"] = cfg_.training.dim;
  cfg["epochs"] = cfg_.training.epochs;
  cfg["negative"] = cfg_.training.negative;
  cfg["window"] = cfg_.training.window;
  cfg["min_count"] = cfg_.training.min_count;
  cfg["seed"] = cfg_.seed;
  cfg["distance"] = std::string(to_string(cfg_.distance));
  cfg["consumed_only"] = cfg_.consumed_only;
  summary["config"] = std::move(cfg);
  write_file(out(artifacts::kSummary), [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
}

void Stages::neighbors() {
  if (cfg_.item.empty()) fail(ErrorKind::kInvalidArgument, "no item given for neighbors");
  const EmbeddingSpace space = load_space_artifact();
  const auto hits = nearest_items(space, cfg_.item, cfg_.k);
  write_file(out(artifacts::kNeighbors), [&](std::ostream& o) {
    o << "item_id,neighbor_id,cosine\n";
    for (const auto& h : hits) {
      o << cfg_.item << ',' << h.item_id << ',' << text::format_double(h.similarity) << '\n';
    }
  });
}

void Stages::project_space() {
  const EmbeddingSpace space = normalize_space(load_space_artifact());
  const Projection p = project(space, cfg_.components);
  write_file(out(artifacts::kProjection), [&](std::ostream& o) {
    o << "id,kind";
    for (std::size_t c = 0; c < cfg_.components; ++c) o << ",pc" << c + 1;
    o << '\n';
    for (std::size_t r = 0; r < p.ids.size(); ++r) {
      const bool user = r >= space.item_count();
      o << (user ? space.user_ids()[r - space.item_count()] : p.ids[r]) << ','
        << (user ? "user" : "item");
      for (std::size_t c = 0; c < cfg_.components; ++c) {
        o << ',' << text::format_double(p.coordinates(r, c));
      }
      o << '\n';
    }
  });
}

}  // namespace

void run_stage(std::string_view stage, const PipelineConfig& config, std::ostream* log) {
  config.validate();
  Stages s(config, log);
  if (stage == "synth") {
    s.synth();
  } else if (stage == "ingest") {
    s.ingest();
  } else if (stage == "train") {
    s.train_space();
  } else if (stage == "metrics") {
    s.metrics();
  } else if (stage == "null") {
    s.null_ensemble();
  } else if (stage == "test") {
    s.test();
  } else if (stage == "regress") {
    s.regress();
  } else if (stage == "report") {
    s.report();
  } else if (stage == "neighbors") {
    s.neighbors();
  } else if (stage == "project") {
    s.project_space();
  } else if (stage == "all") {
    for (const char* name : {"ingest", "train", "metrics", "null", "test", "regress", "report"}) {
      if (log) *log << "== " << name << '\n';
      run_stage(name, config, log);
    }
  } else {
    fail(ErrorKind::kInvalidArgument, "unknown stage '", stage, "'");
  }
}

}  // namespace cocoon
