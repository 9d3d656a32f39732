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

#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <Eigen/Dense>

#include "error.hpp"
#include "text.hpp"

namespace cocoon {

DistanceMetric parse_distance_metric(std::string_view name) {
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  if (name == "cosine") return DistanceMetric::kCosine;
  fail(ErrorKind::kInvalidArgument, "unknown distance '", name,
       "' (expected euclidean or cosine)");
}

std::string_view to_string(DistanceMetric metric) {
  return metric == DistanceMetric::kCosine ? "cosine" : "euclidean";
}

double distance(std::span<const double> a, std::span<const double> b,
                DistanceMetric metric) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kInvalidArgument, "dimension mismatch (", a.size(), " vs ",
         b.size(), ")");
  }
  if (metric == DistanceMetric::kCosine) return 1.0 - cosine(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double radius_of_gyration(const std::vector<std::span<const double>>& positions,
                          std::span<const double> center, DistanceMetric metric) {
  if (positions.empty()) fail(ErrorKind::kInvalidArgument, "empty trajectory");
  double acc = 0.0;
  for (const auto& p : positions) {
    const double d = distance(p, center, metric);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(positions.size()));
}

std::vector<double> genre_centroid(const EmbeddingSpace& space,
                                   const CategoryMap& categories,
                                   std::string_view genre) {
  std::vector<double> centroid(space.dim(), 0.0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < space.item_count(); ++i) {
    const auto cat = categories.category_of(space.item_ids()[i]);
    if (!cat || *cat != genre) continue;
    const auto v = space.item_vector(i);
    for (std::size_t d = 0; d < centroid.size(); ++d) centroid[d] += v[d];
    ++n;
  }
  if (n == 0) fail(ErrorKind::kDegenerate, "genre '", genre, "' has no items in the space");
  for (auto& c : centroid) c /= static_cast<double>(n);
  return centroid;
}

GenreDistanceProfile genre_distance_profile(std::span<const double> user_vector,
                                            const EmbeddingSpace& space,
                                            const CategoryMap& categories,
                                            const ProfileOptions& options) {
  GenreDistanceProfile profile;
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
  for (std::size_t i = 0; i < space.item_count(); ++i) {
    const auto cat = categories.category_of(space.item_ids()[i]);
    if (!cat || !categories.has_category(*cat)) continue;
    auto& [sum, n] = sums[*cat];
    sum.resize(space.dim(), 0.0);
    const auto v = space.item_vector(i);
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += v[d];
    ++n;
  }
  for (auto& [genre, acc] : sums) {
    for (auto& c : acc.first) c /= static_cast<double>(acc.second);
    profile.centroid_distance[genre] = distance(user_vector, acc.first, options.metric);
  }

  auto visit = [&](std::size_t i) {
    switch (categories.classify(space.item_ids()[i])) {
      case ItemClass::kUnknown:
        return;
      case ItemClass::kEntertainment: {
        const double d = distance(user_vector, space.item_vector(i), options.metric);
        profile.entertainment.add(d);
        profile.all.add(d);
        return;
      }
      case ItemClass::kNonEntertainment: {
        const double d = distance(user_vector, space.item_vector(i), options.metric);
        profile.non_entertainment.add(d);
        profile.all.add(d);
        return;
      }
    }
  };
  if (options.restrict_items) {
    for (auto i : *options.restrict_items) {
      if (i >= space.item_count()) fail(ErrorKind::kInvalidArgument, "item row out of range");
      visit(i);
    }
  } else {
    for (std::size_t i = 0; i < space.item_count(); ++i) visit(i);
  }
  if (profile.entertainment.empty() || profile.non_entertainment.empty()) {
    fail(ErrorKind::kDegenerate,
         "distance profile needs both entertainment and non-entertainment items "
         "(have ", profile.entertainment.count, " and ",
         profile.non_entertainment.count, ")");
  }
  return profile;
}

EntertainmentDistance distance_to_entertainment(const GenreDistanceProfile& profile) {
  const double all = profile.all.span();
  if (!(all > 0.0)) return {0.0, true};
  const double ratio = profile.entertainment.span() / all;
  return {-std::clamp(ratio, 0.0, 1.0), false};
}

double range_of_cocoon(const GenreDistanceProfile& profile) {
  if (profile.non_entertainment.empty()) {
    fail(ErrorKind::kDegenerate, "range needs at least one non-entertainment item");
  }
  return profile.non_entertainment.span();
}

double relative_entertainment_preference(const UserSequence& sequence,
                                         const CategoryMap& categories) {
  if (sequence.length() == 0) fail(ErrorKind::kInvalidArgument, "empty sequence");
  double ent = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < sequence.length(); ++i) {
    const auto cls = categories.classify(sequence.items[i]);
    if (cls == ItemClass::kUnknown) continue;
    const double d = i < sequence.durations.size() ? sequence.durations[i] : 1.0;
    total += d;
    if (cls == ItemClass::kEntertainment) ent += d;
  }
  if (!(total > 0.0)) {
    fail(ErrorKind::kDegenerate, "user '", sequence.user_id,
         "' has zero categorised consumption time");
  }
  return ent / total;
}

std::size_t category_count(const UserSequence& sequence, const CategoryMap& categories) {
  std::set<std::string> seen;
  for (const auto& item : sequence.items) {
    auto cat = categories.category_of(item);
    if (cat && categories.has_category(*cat)) seen.insert(std::move(*cat));
  }
  return seen.size();
}

std::vector<int> quintile_rank(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 5) fail(ErrorKind::kInvalidArgument, "quintile ranks need at least 5 values (got ", n, ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<int> ranks(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    ranks[order[pos]] = static_cast<int>(pos * 5 / n) + 1;
  }
  return ranks;
}

std::vector<Neighbor> nearest_items(const EmbeddingSpace& space,
                                    std::string_view item_id, std::size_t k) {
  if (k < 1) fail(ErrorKind::kInvalidArgument, "k must be >= 1");
  const auto query = space.item_index(item_id);
  if (!query) fail(ErrorKind::kNotFound, "item '", item_id, "' is not in the space");
  const auto qv = space.item_vector(*query);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(space.item_count());
  for (std::size_t i = 0; i < space.item_count(); ++i) {
    if (i == *query) continue;
    scored.emplace_back(cosine(qv, space.item_vector(i)), i);
  }
  const std::size_t m = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(m),
                    scored.end(), [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<Neighbor> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back({space.item_ids()[scored[i].second], scored[i].first});
  }
  return out;
}

Projection project(const EmbeddingSpace& space, std::size_t k) {
  const std::size_t n = space.item_count() + space.user_count();
  const std::size_t dim = space.dim();
  if (k < 1) fail(ErrorKind::kInvalidArgument, "projection needs k >= 1");
  if (n < k || n < 2) fail(ErrorKind::kDegenerate, "projection needs at least k vectors");

  Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  Projection proj;
  proj.ids.reserve(n);
  for (std::size_t i = 0; i < space.item_count(); ++i) {
    const auto v = space.item_vector(i);
    for (std::size_t d = 0; d < dim; ++d) data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = v[d];
    proj.ids.push_back(space.item_ids()[i]);
  }
  for (std::size_t u = 0; u < space.user_count(); ++u) {
    const auto v = space.user_vector(u);
    const auto r = static_cast<Eigen::Index>(space.item_count() + u);
    for (std::size_t d = 0; d < dim; ++d) data(r, static_cast<Eigen::Index>(d)) = v[d];
    proj.ids.push_back("user:" + space.user_ids()[u]);
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  const Eigen::MatrixXd cov = (data.transpose() * data) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) fail(ErrorKind::kNumeric, "eigendecomposition failed");

  const Eigen::VectorXd values = eig.eigenvalues();  // ascending
  const double top = std::max(values(values.size() - 1), 0.0);
  const double tol = top * 1e-12 * static_cast<double>(dim);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) rank += values(i) > tol ? 1 : 0;
  if (top <= 0.0 || rank < k) {
    fail(ErrorKind::kDegenerate, "data has rank ", rank, ", cannot project onto ", k,
         " components");
  }

  proj.variances.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    proj.variances[i] = std::max(values(static_cast<Eigen::Index>(dim - 1 - i)), 0.0);
  }
  proj.components = Matrix(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::VectorXd axis = eig.eigenvectors().col(static_cast<Eigen::Index>(dim - 1 - c));
    Eigen::Index big = 0;
    axis.cwiseAbs().maxCoeff(&big);
    if (axis(big) < 0) axis = -axis;
    for (std::size_t d = 0; d < dim; ++d) proj.components(c, d) = axis(static_cast<Eigen::Index>(d));
  }
  proj.coordinates = Matrix(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        s += data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) * proj.components(c, d);
      }
      proj.coordinates(r, c) = s;
    }
  }
  proj.mean.assign(mean.data(), mean.data() + dim);
  return proj;
}

// ---------------------------------------------------------------------------
// Cohort metrics

std::vector<CocoonMetrics> compute_cohort_metrics(const Corpus& corpus,
                                                  const EmbeddingSpace& space,
                                                  const MetricsOptions& options) {
  std::vector<CocoonMetrics> out;
  out.reserve(corpus.users.size());
  const auto& categories = corpus.category_map;
  std::vector<std::size_t> rows;
  for (const auto& user : corpus.users) {
    const auto u = space.user_index(user.user_id);
    if (!u) continue;
    CocoonMetrics m;
    m.user_id = user.user_id;
    m.covariates = user.covariates;
    const auto center = space.user_vector(*u);

    std::vector<std::span<const double>> positions;
    rows.clear();
    for (const auto& item : user.items) {
      if (auto i = space.item_index(item)) {
        positions.push_back(space.item_vector(*i));
        rows.push_back(*i);
      }
    }
    m.length = positions.size();
    if (positions.empty()) continue;
    m.radius = radius_of_gyration(positions, center, options.metric);

    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    ProfileOptions po;
    po.metric = options.metric;
    po.restrict_items = options.consumed_only ? &rows : nullptr;
    try {
      const auto profile = genre_distance_profile(center, space, categories, po);
      m.range = range_of_cocoon(profile);
      const auto de = distance_to_entertainment(profile);
      m.dist_entertainment = de.value;
      m.dist_degenerate = de.degenerate;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerate) throw;
    }
    m.category_count = category_count(user, categories);
    try {
      m.rel_ent_pref = relative_entertainment_preference(user, categories);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerate) throw;
    }
    out.push_back(std::move(m));
  }

  std::vector<double> values;
  std::vector<std::size_t> owners;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].dist_entertainment) {
      values.push_back(*out[i].dist_entertainment);
      owners.push_back(i);
    }
  }
  if (values.size() >= 5) {
    const auto ranks = quintile_rank(values);
    for (std::size_t j = 0; j < owners.size(); ++j) out[owners[j]].ent_rank = ranks[j];
  }
  return out;
}

namespace {

const std::vector<std::string> kMetricColumns = {
    "user_id", "L", "r_g", "range", "dist_ent", "ent_rank", "category_count",
    "rel_ent_pref"};

std::string opt(const std::optional<double>& v) {
  return v ? text::format_double(*v) : std::string("NA");
}

}  // namespace

void write_metrics_csv(const std::vector<CocoonMetrics>& metrics, std::ostream& out) {
  std::set<std::string> covariate_names;
  for (const auto& m : metrics) {
    for (const auto& [name, v] : m.covariates) covariate_names.insert(name);
  }
  for (std::size_t c = 0; c < kMetricColumns.size(); ++c) {
    out << (c ? "," : "") << kMetricColumns[c];
  }
  for (const auto& name : covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& m : metrics) {
    out << m.user_id << ',' << m.length << ',' << text::format_double(m.radius) << ','
        << opt(m.range) << ',' << opt(m.dist_entertainment) << ','
        << (m.ent_rank ? std::to_string(*m.ent_rank) : std::string("NA")) << ','
        << m.category_count << ',' << opt(m.rel_ent_pref);
    for (const auto& name : covariate_names) {
      auto it = m.covariates.find(name);
      out << ',' << (it == m.covariates.end() ? std::string("NA") : text::format_double(it->second));
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "failed writing metrics");
}

std::vector<CocoonMetrics> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kSchema, "metrics file is empty");
  const auto header = split_csv_line(line);
  if (header.size() < kMetricColumns.size() ||
      !std::equal(kMetricColumns.begin(), kMetricColumns.end(), header.begin())) {
    fail(ErrorKind::kSchema, "metrics header must start with user_id,L,r_g,range,dist_ent,"
                             "ent_rank,category_count,rel_ent_pref");
  }
  std::vector<CocoonMetrics> out;
  std::size_t line_no = 1;
  auto num = [&](const std::string& s) -> std::optional<double> {
    if (text::is_missing(s)) return std::nullopt;
    auto v = text::parse_double(s);
    if (!v) throw ParseError(line_no, "bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw ParseError(line_no, "wrong field count");
    CocoonMetrics m;
    m.user_id = f[0];
    m.length = static_cast<std::size_t>(num(f[1]).value_or(0));
    const auto r = num(f[2]);
    if (!r) throw ParseError(line_no, "r_g is missing");
    m.radius = *r;
    m.range = num(f[3]);
    m.dist_entertainment = num(f[4]);
    if (auto rank = num(f[5])) m.ent_rank = static_cast<int>(*rank);
    m.category_count = static_cast<std::size_t>(num(f[6]).value_or(0));
    m.rel_ent_pref = num(f[7]);
    for (std::size_t c = kMetricColumns.size(); c < f.size(); ++c) {
      if (auto v = num(f[c])) m.covariates[header[c]] = *v;
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::optional<double> metric_value(const CocoonMetrics& m, std::string_view column) {
  if (column == "L") return static_cast<double>(m.length);
  if (column == "r_g") return m.radius;
  if (column == "range") return m.range;
  if (column == "dist_ent") return m.dist_entertainment;
  if (column == "ent_rank") {
    return m.ent_rank ? std::optional<double>(*m.ent_rank) : std::nullopt;
  }
  if (column == "category_count") return static_cast<double>(m.category_count);
  if (column == "rel_ent_pref") return m.rel_ent_pref;
  auto it = m.covariates.find(std::string(column));
  if (it == m.covariates.end()) return std::nullopt;
  return it->second;
}

}  // namespace cocoon
