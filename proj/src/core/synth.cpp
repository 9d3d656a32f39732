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

#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "error.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace cocoon {

void SynthParams::validate() const {
  if (n_genres < 2) fail(ErrorKind::kInvalidArgument, "need at least 2 genres");
  if (items_per_genre < 2) fail(ErrorKind::kInvalidArgument, "need at least 2 items per genre");
  if (min_length < 1 || max_length < min_length) {
    fail(ErrorKind::kInvalidArgument, "sequence lengths need 1 <= min <= max");
  }
  if (groups.empty() || user_count() == 0) fail(ErrorKind::kInvalidArgument, "no users requested");
  std::set<std::size_t> ent(entertainment_genres.begin(), entertainment_genres.end());
  for (auto g : ent) {
    if (g >= n_genres) fail(ErrorKind::kInvalidArgument, "entertainment genre ", g, " out of range");
  }
  if (ent.size() >= n_genres) {
    fail(ErrorKind::kInvalidArgument, "at least one genre must be non-entertainment");
  }
  for (const auto& g : groups) {
    if (!(g.stickiness >= 0.0 && g.stickiness <= 1.0)) {
      fail(ErrorKind::kInvalidArgument, "stickiness of group '", g.label, "' outside [0, 1]");
    }
    for (auto h : g.home_genres) {
      if (h >= n_genres) fail(ErrorKind::kInvalidArgument, "home genre ", h, " out of range");
    }
  }
  if (!(session_persistence >= 0.0 && session_persistence < 1.0)) {
    fail(ErrorKind::kInvalidArgument, "session_persistence must be in [0, 1)");
  }
  if (!(class_noise >= 0.0)) fail(ErrorKind::kInvalidArgument, "class_noise must be >= 0");
}

std::size_t SynthParams::user_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

SynthParams cohort_params() {
  SynthParams p;
  p.entertainment_genres = {0, 1, 2};
  p.groups = {
      UserGroup{"sticky", 250, 0.9, 2.0, {0, 1, 2}},
      UserGroup{"omnivore", 250, 0.1, 4.0, {}},
  };
  p.session_persistence = 0.8;
  return p;
}

std::string genre_name(std::size_t genre) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "g%02zu", genre);
  return buf;
}

std::string item_name(std::size_t genre, std::size_t item) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "g%02zu_i%03zu", genre, item);
  return buf;
}

SynthCorpus generate_corpus(const SynthParams& params) {
  params.validate();
  const std::size_t n_users = params.user_count();
  const int width = static_cast<int>(std::to_string(n_users).size());

  std::vector<Event> events;
  SynthCorpus out;
  out.truth.reserve(n_users);
  std::vector<std::map<std::string, double>> covariates;
  covariates.reserve(n_users);

  std::size_t u = 0;
  for (const auto& group : params.groups) {
    for (std::size_t k = 0; k < group.count; ++k, ++u) {
      Rng rng(derive_seed(params.seed, u));
      char id[32];
      std::snprintf(id, sizeof(id), "u%0*zu", width, u);

      const std::size_t home =
          group.home_genres.empty()
              ? static_cast<std::size_t>(rng.below(params.n_genres))
              : group.home_genres[rng.below(group.home_genres.size())];
      const std::size_t length =
          params.min_length +
          static_cast<std::size_t>(rng.below(params.max_length - params.min_length + 1));

      auto draw_genre = [&] {
        if (rng.bernoulli(group.stickiness)) return home;
        auto g = static_cast<std::size_t>(rng.below(params.n_genres - 1));
        return g >= home ? g + 1 : g;
      };

      std::size_t genre = 0;
      std::size_t item = 0;
      for (std::size_t t = 0; t < length; ++t) {
        const bool stay = t > 0 && rng.bernoulli(params.session_persistence);
        const std::size_t next_genre = stay ? genre : draw_genre();
        std::size_t next_item;
        if (t > 0 && next_genre == genre) {
          next_item = static_cast<std::size_t>(rng.below(params.items_per_genre - 1));
          if (next_item >= item) ++next_item;
        } else {
          next_item = static_cast<std::size_t>(rng.below(params.items_per_genre));
        }
        genre = next_genre;
        item = next_item;
        Event e;
        e.user_id = id;
        e.timestamp = static_cast<std::int64_t>(t);
        e.item_id = item_name(genre, item);
        e.category = genre_name(genre);
        e.duration = static_cast<double>(5 + rng.below(296));
        events.push_back(std::move(e));
      }

      std::map<std::string, double> cov;
      cov["class_proxy"] = group.class_mean + rng.normal(0.0, params.class_noise);
      cov["gender"] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      cov["age"] = std::clamp(std::round(rng.normal(32.0, 9.0)), 16.0, 70.0);
      covariates.push_back(std::move(cov));
      out.truth.push_back({id, group.stickiness, genre_name(home), group.label});
    }
  }

  out.corpus = corpus_from_events(events);
  for (std::size_t i = 0; i < n_users; ++i) {
    // corpus users are sorted by id, which matches generation order
    out.corpus.users[i].covariates = std::move(covariates[i]);
  }
  CategoryMap map;
  const std::set<std::size_t> ent(params.entertainment_genres.begin(),
                                  params.entertainment_genres.end());
  for (std::size_t g = 0; g < params.n_genres; ++g) {
    map.set_entertainment(genre_name(g), ent.contains(g));
    for (std::size_t i = 0; i < params.items_per_genre; ++i) {
      map.set_item(item_name(g, i), genre_name(g));
    }
  }
  attach_category_map(out.corpus, std::move(map));
  return out;
}

void write_ground_truth(const std::vector<GroundTruth>& truth, std::ostream& out) {
  out << "user_id,stickiness,home_genre,class\n";
  for (const auto& t : truth) {
    out << t.user_id << ',' << text::format_double(t.stickiness) << ',' << t.home_genre
        << ',' << t.label << '\n';
  }
}

void write_covariates(const Corpus& corpus, std::ostream& out) {
  out << "user_id,class_proxy,gender,age\n";
  auto cell = [](const UserSequence& u, const char* name) {
    auto it = u.covariates.find(name);
    return it == u.covariates.end() ? std::string("NA") : text::format_double(it->second);
  };
  for (const auto& u : corpus.users) {
    out << u.user_id << ',' << cell(u, "class_proxy") << ',' << cell(u, "gender") << ','
        << cell(u, "age") << '\n';
  }
}

}  // namespace cocoon
