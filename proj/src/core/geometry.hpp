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

// Per-user cocoon geometry over a trained embedding space.

#ifndef COCOON_CORE_GEOMETRY_HPP_
#define COCOON_CORE_GEOMETRY_HPP_

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "embedding.hpp"

namespace cocoon {

enum class DistanceMetric { kEuclidean, kCosine };

DistanceMetric parse_distance_metric(std::string_view name);
std::string_view to_string(DistanceMetric metric);

// Euclidean, or 1 - cosine similarity.
double distance(std::span<const double> a, std::span<const double> b,
                DistanceMetric metric = DistanceMetric::kEuclidean);

// sqrt(mean_i d(position_i, center)^2). One position per event, repeats kept.
double radius_of_gyration(const std::vector<std::span<const double>>& positions,
                          std::span<const double> center,
                          DistanceMetric metric = DistanceMetric::kEuclidean);

// Arithmetic mean of the genre's in-vocabulary item vectors.
std::vector<double> genre_centroid(const EmbeddingSpace& space,
                                   const CategoryMap& categories,
                                   std::string_view genre);

struct DistanceExtremes {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  std::size_t count = 0;

  void add(double d) {
    min = d < min ? d : min;
    max = d > max ? d : max;
    ++count;
  }
  bool empty() const { return count == 0; }
  double span() const { return empty() ? 0.0 : max - min; }
};

struct GenreDistanceProfile {
  std::map<std::string, double> centroid_distance;
  DistanceExtremes entertainment;
  DistanceExtremes non_entertainment;
  DistanceExtremes all;  // entertainment and non-entertainment items
};

struct ProfileOptions {
  DistanceMetric metric = DistanceMetric::kEuclidean;
  // When set, item-level extremes only consider these item rows.
  const std::vector<std::size_t>* restrict_items = nullptr;
};

// Items of unknown category are skipped. Throws kDegenerate unless the
// considered items include both classes.
GenreDistanceProfile genre_distance_profile(std::span<const double> user_vector,
                                            const EmbeddingSpace& space,
                                            const CategoryMap& categories,
                                            const ProfileOptions& options = {});

struct EntertainmentDistance {
  double value = 0.0;        // in [-1, 0]
  bool degenerate = false;   // all-item span was zero
};

// -(span of entertainment distances) / (span of all distances).
EntertainmentDistance distance_to_entertainment(const GenreDistanceProfile& profile);

// Spread of distances to non-entertainment items.
double range_of_cocoon(const GenreDistanceProfile& profile);

// Entertainment time over total time; unknown-category events are left out
// of both sums.
double relative_entertainment_preference(const UserSequence& sequence,
                                         const CategoryMap& categories);

// Distinct known categories touched by the sequence.
std::size_t category_count(const UserSequence& sequence, const CategoryMap& categories);

// Equal-frequency quintiles, 1 (lowest) .. 5, ties in input order.
std::vector<int> quintile_rank(std::span<const double> values);

struct Neighbor {
  std::string item_id;
  double similarity = 0.0;
};

// Cosine neighbours of an item, self excluded, most similar first.
std::vector<Neighbor> nearest_items(const EmbeddingSpace& space,
                                    std::string_view item_id, std::size_t k);

struct Projection {
  std::vector<std::string> ids;        // items, then `user:`-prefixed users
  Matrix coordinates;                  // ids.size() x k
  Matrix components;                   // k x dim, orthonormal rows
  std::vector<double> variances;       // all eigenvalues, descending
  std::vector<double> mean;            // dim
};

// PCA onto the top-k principal axes of the centered item+user matrix.
// Eigenvalues use the n - 1 denominator.
Projection project(const EmbeddingSpace& space, std::size_t k);

struct CocoonMetrics {
  std::string user_id;
  std::size_t length = 0;  // in-vocabulary events
  double radius = 0.0;
  std::optional<double> range;
  std::optional<double> dist_entertainment;
  bool dist_degenerate = false;
  std::optional<int> ent_rank;
  std::size_t category_count = 0;
  std::optional<double> rel_ent_pref;
  std::map<std::string, double> covariates;
};

struct MetricsOptions {
  DistanceMetric metric = DistanceMetric::kEuclidean;
  bool consumed_only = false;
};

// Metrics for every corpus user present in the space. Values that are
// undefined for a user (for instance no non-entertainment item under
// consumed_only) are left empty rather than failing the cohort.
std::vector<CocoonMetrics> compute_cohort_metrics(const Corpus& corpus,
                                                  const EmbeddingSpace& space,
                                                  const MetricsOptions& options = {});

// `user_id,L,r_g,range,dist_ent,ent_rank,category_count,rel_ent_pref,<cov...>`
// Missing values are written as NA.
void write_metrics_csv(const std::vector<CocoonMetrics>& metrics, std::ostream& out);
std::vector<CocoonMetrics> read_metrics_csv(std::istream& in);

// Column lookup by metrics-file name (`r_g`, `range`, ..., or a covariate).
std::optional<double> metric_value(const CocoonMetrics& m, std::string_view column);

}  // namespace cocoon

#endif  // COCOON_CORE_GEOMETRY_HPP_
