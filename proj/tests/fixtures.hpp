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

// Shared corpora for tests and the acceptance runner.

#ifndef COCOON_TESTS_FIXTURES_HPP_
#define COCOON_TESTS_FIXTURES_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "embedding.hpp"
#include "rng.hpp"

namespace fixtures {

// Users in block b only consume items "b<b>_i<k>". Sequences avoid immediate
// repeats.
inline cocoon::Corpus block_corpus(std::size_t blocks, std::size_t users_per_block,
                                   std::size_t items_per_block, std::size_t length,
                                   std::uint64_t seed) {
  std::vector<cocoon::Event> events;
  cocoon::Rng rng(seed);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t u = 0; u < users_per_block; ++u) {
      const std::string user = "b" + std::to_string(b) + "_u" + std::to_string(u);
      std::size_t prev = items_per_block;
      for (std::size_t t = 0; t < length; ++t) {
        std::size_t item;
        do {
          item = static_cast<std::size_t>(rng.below(items_per_block));
        } while (item == prev);
        prev = item;
        cocoon::Event e;
        e.user_id = user;
        e.timestamp = static_cast<std::int64_t>(t);
        e.item_id = "b" + std::to_string(b) + "_i" + std::to_string(item);
        e.category = "block" + std::to_string(b);
        events.push_back(e);
      }
    }
  }
  return cocoon::corpus_from_events(events);
}

struct BlockSimilarity {
  double within = 0.0;
  double cross = 0.0;
  double gap() const { return within - cross; }
};

// Mean pairwise cosine of item vectors within and across blocks; the block
// is the item id prefix before '_'.
inline BlockSimilarity block_similarity(const cocoon::EmbeddingSpace& space) {
  BlockSimilarity s;
  double n_within = 0.0, n_cross = 0.0;
  const auto& ids = space.item_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto bi = ids[i].substr(0, ids[i].find('_'));
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const auto bj = ids[j].substr(0, ids[j].find('_'));
      const double c = cocoon::cosine(space.item_vector(i), space.item_vector(j));
      if (bi == bj) {
        s.within += c;
        n_within += 1.0;
      } else {
        s.cross += c;
        n_cross += 1.0;
      }
    }
  }
  if (n_within > 0) s.within /= n_within;
  if (n_cross > 0) s.cross /= n_cross;
  return s;
}

using Rows = std::vector<std::vector<double>>;

// Haar-ish random orthogonal matrix from Gram-Schmidt on Gaussian columns.
inline Rows random_orthogonal(std::size_t dim, cocoon::Rng& rng) {
  Rows q;
  while (q.size() < dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    for (const auto& b : q) {
      double p = 0.0;
      for (std::size_t d = 0; d < dim; ++d) p += v[d] * b[d];
      for (std::size_t d = 0; d < dim; ++d) v[d] -= p * b[d];
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-6) continue;
    for (auto& x : v) x /= n;
    q.push_back(std::move(v));
  }
  return q;
}

inline cocoon::Matrix apply(const Rows& q, const cocoon::Matrix& m) {
  cocoon::Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      double s = 0.0;
      for (std::size_t d = 0; d < m.cols(); ++d) s += q[i][d] * m(r, d);
      out(r, i) = s;
    }
  }
  return out;
}

inline cocoon::EmbeddingSpace rotate(const cocoon::EmbeddingSpace& space, const Rows& q) {
  return cocoon::EmbeddingSpace(space.item_ids(), apply(q, space.items()), space.user_ids(),
                                apply(q, space.users()));
}

struct LabeledWorld {
  cocoon::Corpus corpus;
  cocoon::EmbeddingSpace space;
};

// Random unit-norm space with `genres` categories (genre 0 is entertainment)
// and users whose sequences draw from the vocabulary.
inline LabeledWorld random_world(cocoon::Rng& rng, std::size_t dim, std::size_t items,
                                 std::size_t users, std::size_t genres, std::size_t length) {
  std::vector<std::string> item_ids, user_ids;
  cocoon::Matrix iv(items, dim), uv(users, dim);
  for (auto& x : iv.data()) x = rng.normal();
  for (auto& x : uv.data()) x = rng.normal();
  LabeledWorld w{{}, {}};
  for (std::size_t g = 0; g < genres; ++g) {
    w.corpus.category_map.set_entertainment("g" + std::to_string(g), g == 0);
  }
  for (std::size_t i = 0; i < items; ++i) {
    item_ids.push_back("i" + std::to_string(i));
    // The first items cover every genre once.
    const std::size_t g = i < genres ? i : static_cast<std::size_t>(rng.below(genres));
    w.corpus.category_map.set_item(item_ids.back(), "g" + std::to_string(g));
  }
  for (std::size_t u = 0; u < users; ++u) {
    cocoon::UserSequence seq;
    seq.user_id = "u" + std::to_string(u);
    user_ids.push_back(seq.user_id);
    for (std::size_t t = 0; t < length; ++t) {
      seq.items.push_back(item_ids[rng.below(items)]);
      seq.timestamps.push_back(static_cast<std::int64_t>(t));
      seq.durations.push_back(1.0 + static_cast<double>(rng.below(5)));
    }
    w.corpus.users.push_back(std::move(seq));
  }
  w.space = cocoon::normalize_space(cocoon::EmbeddingSpace(item_ids, iv, user_ids, uv));
  return w;
}

}  // namespace fixtures

#endif  // COCOON_TESTS_FIXTURES_HPP_
