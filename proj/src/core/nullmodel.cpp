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

#include "nullmodel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <thread>
#include <unordered_map>

#include "error.hpp"
#include "text.hpp"

namespace cocoon {

namespace {

bool has_equal_neighbors(std::span<const std::uint32_t> s) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] == s[i - 1]) return true;
  }
  return false;
}

// Can `counts` (total `remaining`) be laid out without equal neighbours
// when the first slot must not hold `banned`?
bool completable(const std::vector<std::size_t>& counts, std::size_t remaining,
                 std::size_t banned) {
  if (remaining == 0) return true;
  const std::size_t half = (remaining + 1) / 2;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    if (counts[v] > half) return false;
    if (v == banned && remaining % 2 == 1 && counts[v] == half) return false;
  }
  return true;
}

// Randomized greedy: each step draws among the values that keep the rest
// completable, weighted by remaining count.
std::vector<std::uint32_t> construct_arrangement(std::span<const std::uint32_t> items,
                                                 Rng& rng) {
  std::vector<std::uint32_t> values(items.begin(), items.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<std::size_t> counts(values.size(), 0);
  for (auto it : items) {
    counts[static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), it) - values.begin())]++;
  }
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t prev = kNone;
  std::size_t remaining = items.size();
  std::vector<std::uint32_t> out;
  out.reserve(items.size());
  std::vector<std::size_t> candidates;
  while (remaining > 0) {
    candidates.clear();
    std::size_t weight = 0;
    for (std::size_t v = 0; v < values.size(); ++v) {
      if (v == prev || counts[v] == 0) continue;
      --counts[v];
      if (completable(counts, remaining - 1, v)) {
        candidates.push_back(v);
        weight += counts[v] + 1;
      }
      ++counts[v];
    }
    if (candidates.empty()) fail(ErrorKind::kNumeric, "shuffle construction dead-ended");
    auto pick = rng.below(weight);
    std::size_t chosen = candidates.back();
    for (auto v : candidates) {
      if (pick < counts[v]) {
        chosen = v;
        break;
      }
      pick -= counts[v];
    }
    --counts[chosen];
    --remaining;
    out.push_back(values[chosen]);
    prev = chosen;
  }
  return out;
}

}  // namespace

bool shuffle_feasible(std::span<const std::uint32_t> items) {
  std::unordered_map<std::uint32_t, std::size_t> counts;
  std::size_t max = 0;
  for (auto it : items) max = std::max(max, ++counts[it]);
  return max <= (items.size() + 1) / 2;
}

ShuffleResult constrained_shuffle(std::span<const std::uint32_t> items, Rng& rng) {
  ShuffleResult res;
  res.sequence.assign(items.begin(), items.end());
  if (items.size() <= 1) return res;
  if (!shuffle_feasible(items)) {
    res.feasible = false;
    return res;
  }
  for (int attempt = 0; attempt < kShuffleRejectionLimit; ++attempt) {
    rng.shuffle(res.sequence.begin(), res.sequence.end());
    if (!has_equal_neighbors(res.sequence)) return res;
  }
  res.sequence = construct_arrangement(items, rng);
  res.uniform = false;
  return res;
}

StringShuffleResult constrained_shuffle(const std::vector<std::string>& items, Rng& rng) {
  std::map<std::string, std::uint32_t> ids;
  std::vector<const std::string*> names;
  std::vector<std::uint32_t> encoded;
  encoded.reserve(items.size());
  for (const auto& item : items) {
    auto [it, inserted] = ids.emplace(item, static_cast<std::uint32_t>(names.size()));
    if (inserted) names.push_back(&it->first);
    encoded.push_back(it->second);
  }
  const auto r = constrained_shuffle(encoded, rng);
  StringShuffleResult out;
  out.feasible = r.feasible;
  out.uniform = r.uniform;
  out.sequence.reserve(r.sequence.size());
  for (auto id : r.sequence) out.sequence.push_back(*names[id]);
  return out;
}

ShuffledCorpus shuffle_corpus(const Corpus& corpus, std::uint64_t seed) {
  ShuffledCorpus out;
  out.corpus = corpus;
  out.feasible.resize(corpus.users.size(), true);
  out.uniform.resize(corpus.users.size(), true);
  for (std::size_t u = 0; u < corpus.users.size(); ++u) {
    auto& user = out.corpus.users[u];
    // Shuffle event indices, tagged by item so equal items stay apart.
    std::map<std::string, std::uint32_t> ids;
    std::vector<std::uint32_t> tags(user.length());
    for (std::size_t i = 0; i < user.length(); ++i) {
      tags[i] = ids.emplace(user.items[i], static_cast<std::uint32_t>(ids.size())).first->second;
    }
    Rng rng(derive_seed(seed, u));
    const auto r = constrained_shuffle(tags, rng);
    out.feasible[u] = r.feasible;
    out.uniform[u] = r.uniform;
    if (!r.feasible) continue;
    // Map the tag sequence back onto concrete events, taking each tag's
    // events in original order.
    std::vector<std::vector<std::size_t>> slots(ids.size());
    for (std::size_t i = 0; i < tags.size(); ++i) slots[tags[i]].push_back(i);
    std::vector<std::size_t> next(ids.size(), 0);
    const auto& src = corpus.users[u];
    for (std::size_t i = 0; i < r.sequence.size(); ++i) {
      const auto tag = r.sequence[i];
      const auto e = slots[tag][next[tag]++];
      user.items[i] = src.items[e];
      user.durations[i] = src.durations[e];
    }
  }
  return out;
}

std::vector<double> user_radii(const Corpus& corpus, const EmbeddingSpace& space,
                               DistanceMetric metric) {
  std::vector<double> out(corpus.users.size(), 0.0);
  std::vector<std::span<const double>> positions;
  for (std::size_t u = 0; u < corpus.users.size(); ++u) {
    const auto& user = corpus.users[u];
    const auto row = space.user_index(user.user_id);
    if (!row) fail(ErrorKind::kNotFound, "user '", user.user_id, "' is not in the space");
    positions.clear();
    for (const auto& item : user.items) {
      if (auto i = space.item_index(item)) positions.push_back(space.item_vector(*i));
    }
    out[u] = radius_of_gyration(positions, space.user_vector(*row), metric);
  }
  return out;
}

std::size_t NullEnsemble::infeasible_count() const {
  return static_cast<std::size_t>(std::count(feasible.begin(), feasible.end(), false));
}

std::uint64_t repetition_seed(std::uint64_t master, std::size_t repetition) {
  return derive_seed(master, 0x5eed0000ULL + repetition);
}

NullEnsemble build_null_ensemble(const Corpus& corpus, const TrainingConfig& config,
                                 const NullOptions& options) {
  if (options.repetitions < 1) fail(ErrorKind::kInvalidArgument, "repetitions must be >= 1");
  config.validate();
  const std::size_t reps = options.repetitions;
  const std::size_t n_users = corpus.users.size();

  NullEnsemble ens;
  ens.repetitions = reps;
  ens.user_ids.reserve(n_users);
  for (const auto& u : corpus.users) ens.user_ids.push_back(u.user_id);
  ens.feasible.assign(n_users, true);
  ens.fallback_count.assign(n_users, 0);
  ens.radius.assign(reps, {});
  std::vector<EmbeddingSpace> spaces(reps);
  std::vector<std::vector<bool>> feasible(reps), uniform(reps);

  TrainingConfig rep_config = config;
  const std::size_t parallel = std::max<std::size_t>(1, std::min(options.parallel, reps));
  if (parallel > 1) rep_config.workers = 1;

  auto run_rep = [&](std::size_t r) {
    try {
      auto shuffled = shuffle_corpus(corpus, repetition_seed(options.seed, r));
      auto space = normalize_space(train(shuffled.corpus, rep_config));
      ens.radius[r] = user_radii(shuffled.corpus, space, options.metric);
      feasible[r] = std::move(shuffled.feasible);
      uniform[r] = std::move(shuffled.uniform);
      spaces[r] = std::move(space);
    } catch (const Error& e) {
      throw Error(e.kind(), "null repetition " + std::to_string(r) + ": " + e.what());
    }
  };

  std::size_t emitted = 0;
  auto emit_ready = [&](std::size_t upto) {
    for (; emitted < upto; ++emitted) {
      if (options.on_repetition) options.on_repetition(emitted, spaces[emitted]);
      if (!options.keep_spaces) spaces[emitted] = EmbeddingSpace();
    }
  };

  for (std::size_t start = 0; start < reps; start += parallel) {
    const std::size_t end = std::min(reps, start + parallel);
    if (end - start == 1) {
      run_rep(start);
    } else {
      std::vector<std::exception_ptr> errors(end - start);
      {
        std::vector<std::jthread> threads;
        for (std::size_t r = start; r < end; ++r) {
          threads.emplace_back([&, r] {
            try {
              run_rep(r);
            } catch (...) {
              errors[r - start] = std::current_exception();
            }
          });
        }
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    emit_ready(end);
  }

  ens.expected.assign(n_users, 0.0);
  for (std::size_t u = 0; u < n_users; ++u) {
    double s = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      s += ens.radius[r][u];
      if (!feasible[r][u]) ens.feasible[u] = false;
      if (!uniform[r][u]) ++ens.fallback_count[u];
    }
    ens.expected[u] = s / static_cast<double>(reps);
  }
  if (options.keep_spaces) ens.spaces = std::move(spaces);
  return ens;
}

CocoonTestResult paired_cocoon_test(std::span<const double> observed,
                                    std::span<const double> expected) {
  const auto t = paired_t_test(observed, expected);
  CocoonTestResult r;
  r.t = t.t;
  r.df = static_cast<std::size_t>(t.df);
  r.p = t.p;
  r.mean_diff = t.mean_diff;
  r.n = t.n;
  return r;
}

void write_expected_csv(const NullEnsemble& ens, std::ostream& out) {
  out << "user_id,expected_r_g,feasible,fallback_shuffles";
  for (std::size_t r = 0; r < ens.repetitions; ++r) out << ",rep_" << r;
  out << '\n';
  for (std::size_t u = 0; u < ens.user_ids.size(); ++u) {
    out << ens.user_ids[u] << ',' << text::format_double(ens.expected[u]) << ','
        << (ens.feasible[u] ? 1 : 0) << ',' << ens.fallback_count[u];
    for (std::size_t r = 0; r < ens.repetitions; ++r) {
      out << ',' << text::format_double(ens.radius[r][u]);
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "failed writing expected radii");
}

NullEnsemble read_expected_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kSchema, "expected-radius file is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "user_id" || header[1] != "expected_r_g" ||
      header[2] != "feasible" || header[3] != "fallback_shuffles") {
    fail(ErrorKind::kSchema,
         "expected-radius header must start with user_id,expected_r_g,feasible,fallback_shuffles");
  }
  NullEnsemble ens;
  ens.repetitions = header.size() - 4;
  ens.radius.assign(ens.repetitions, {});
  std::size_t line_no = 1;
  auto num = [&](const std::string& s) {
    auto v = text::parse_double(s);
    if (!v) throw ParseError(line_no, "bad number '" + s + "'");
    return *v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw ParseError(line_no, "wrong field count");
    ens.user_ids.push_back(f[0]);
    ens.expected.push_back(num(f[1]));
    ens.feasible.push_back(num(f[2]) != 0.0);
    ens.fallback_count.push_back(static_cast<std::size_t>(num(f[3])));
    for (std::size_t r = 0; r < ens.repetitions; ++r) ens.radius[r].push_back(num(f[4 + r]));
  }
  return ens;
}

std::vector<HistogramBin> radius_histogram(std::span<const double> observed,
                                           std::span<const double> expected,
                                           std::size_t bins) {
  if (bins < 1) fail(ErrorKind::kInvalidArgument, "histogram needs >= 1 bin");
  if (observed.empty() && expected.empty()) return {};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto s : {observed, expected}) {
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) hi = lo + 1e-9;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + width * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  auto slot = [&](double v) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    return std::min(b, bins - 1);
  };
  for (double v : observed) ++out[slot(v)].observed;
  for (double v : expected) ++out[slot(v)].expected;
  return out;
}

void write_histogram_csv(const std::vector<HistogramBin>& bins, std::ostream& out) {
  out << "bin_lo,bin_hi,observed_count,expected_count\n";
  for (const auto& b : bins) {
    out << text::format_double(b.lo) << ',' << text::format_double(b.hi) << ','
        << b.observed << ',' << b.expected << '\n';
  }
}

}  // namespace cocoon
