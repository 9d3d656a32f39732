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

// Shuffle null model for the radius of gyration.
//
// Each user's sequence is permuted so that no two adjacent items are equal,
// the embedding is retrained on the permuted corpus and the radius observed
// there is the expected value for that user.

#ifndef COCOON_CORE_NULLMODEL_HPP_
#define COCOON_CORE_NULLMODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "embedding.hpp"
#include "geometry.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace cocoon {

inline constexpr int kShuffleRejectionLimit = 100;

// max multiplicity <= ceil(L / 2)
bool shuffle_feasible(std::span<const std::uint32_t> items);

struct ShuffleResult {
  std::vector<std::uint32_t> sequence;  // input unchanged when infeasible
  bool feasible = true;
  // False when rejection sampling gave up and the constructive fallback
  // produced the arrangement.
  bool uniform = true;
};

// Uniform over arrangements without equal neighbours (rejection sampling),
// falling back to a randomized construction after kShuffleRejectionLimit
// rejected draws.
ShuffleResult constrained_shuffle(std::span<const std::uint32_t> items, Rng& rng);

// Same, on item ids.
struct StringShuffleResult {
  std::vector<std::string> sequence;
  bool feasible = true;
  bool uniform = true;
};
StringShuffleResult constrained_shuffle(const std::vector<std::string>& items, Rng& rng);

struct ShuffledCorpus {
  Corpus corpus;
  std::vector<bool> feasible;   // per user, corpus order
  std::vector<bool> uniform;
};

// Permutes every user's events (item and duration move together) with a
// per-user stream derived from `seed`.
ShuffledCorpus shuffle_corpus(const Corpus& corpus, std::uint64_t seed);

// r_g per corpus user (corpus order) in a normalized space.
std::vector<double> user_radii(const Corpus& corpus, const EmbeddingSpace& space,
                               DistanceMetric metric = DistanceMetric::kEuclidean);

struct NullOptions {
  std::size_t repetitions = 10;
  std::uint64_t seed = 1;
  DistanceMetric metric = DistanceMetric::kEuclidean;
  // Repetitions trained concurrently. Each concurrent repetition trains with
  // a single worker so results do not depend on scheduling.
  std::size_t parallel = 1;
  bool keep_spaces = true;
  // Called once per finished repetition (from the calling thread, in
  // repetition order).
  std::function<void(std::size_t, const EmbeddingSpace&)> on_repetition;
};

struct NullEnsemble {
  std::size_t repetitions = 0;
  std::vector<std::string> user_ids;
  std::vector<bool> feasible;
  std::vector<std::size_t> fallback_count;   // non-uniform shuffles per user
  std::vector<std::vector<double>> radius;   // [repetition][user]
  std::vector<double> expected;              // mean over repetitions
  std::vector<EmbeddingSpace> spaces;        // normalized, when kept

  std::size_t infeasible_count() const;
};

std::uint64_t repetition_seed(std::uint64_t master, std::size_t repetition);

NullEnsemble build_null_ensemble(const Corpus& corpus, const TrainingConfig& config,
                                 const NullOptions& options);

struct CocoonTestResult {
  double t = 0.0;
  std::size_t df = 0;
  double p = 1.0;
  double mean_diff = 0.0;  // observed - expected
  std::size_t n = 0;
};

CocoonTestResult paired_cocoon_test(std::span<const double> observed,
                                    std::span<const double> expected);

// expected.csv: user_id,expected_r_g,feasible,fallback_shuffles,rep_0..rep_{R-1}
void write_expected_csv(const NullEnsemble& ensemble, std::ostream& out);
NullEnsemble read_expected_csv(std::istream& in);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t observed = 0;
  std::size_t expected = 0;
};

// Equal-width bins over the joint range of both samples.
std::vector<HistogramBin> radius_histogram(std::span<const double> observed,
                                           std::span<const double> expected,
                                           std::size_t bins = 20);
void write_histogram_csv(const std::vector<HistogramBin>& bins, std::ostream& out);

}  // namespace cocoon

#endif  // COCOON_CORE_NULLMODEL_HPP_
