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

#include "cocoon/cocoon.h"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "nullmodel.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "stats.hpp"

struct cocoon_corpus {
  cocoon::Corpus corpus;
};

struct cocoon_space {
  cocoon::EmbeddingSpace space;
};

struct cocoon_metrics {
  std::vector<cocoon::CocoonMetrics> rows;
};

struct cocoon_pipeline {
  cocoon::PipelineConfig config;
};

namespace {

thread_local std::string g_last_error;

cocoon_status set_error(cocoon_status status, const char* what) {
  g_last_error = what;
  return status;
}

// Runs `fn`, mapping exceptions to status codes.
template <typename Fn>
cocoon_status guarded(Fn&& fn) noexcept {
  g_last_error.clear();
  try {
    fn();
    return COCOON_OK;
  } catch (const cocoon::Error& e) {
    return set_error(static_cast<cocoon_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(COCOON_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(COCOON_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return set_error(COCOON_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(COCOON_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (!p) cocoon::fail(cocoon::ErrorKind::kInvalidArgument, name, " is null");
}

std::ifstream open_in(const char* path, bool binary = false) {
  require(path, "path");
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) cocoon::fail(cocoon::ErrorKind::kNotFound, "cannot open '", path, "'");
  return in;
}

std::ofstream open_out(const char* path, bool binary = false) {
  require(path, "path");
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) cocoon::fail(cocoon::ErrorKind::kIo, "cannot write '", path, "'");
  return out;
}

void close_out(std::ofstream& out, const char* path) {
  out.flush();
  if (!out) cocoon::fail(cocoon::ErrorKind::kIo, "failed writing '", path, "'");
}

cocoon::TrainingConfig to_config(const cocoon_train_config& c) {
  cocoon::TrainingConfig t;
  t.dim = c.dim;
  t.min_count = c.min_count;
  t.epochs = c.epochs;
  t.negative = c.negative;
  t.window = c.window;
  t.shrink_window = c.shrink_window != 0;
  t.lr_start = c.lr_start;
  t.lr_end = c.lr_end;
  t.seed = c.seed;
  t.workers = c.workers;
  return t;
}

}  // namespace

extern "C" {

const char* cocoon_version(void) { return "0.1.0"; }

const char* cocoon_status_string(cocoon_status status) {
  switch (status) {
    case COCOON_OK: return "ok";
    case COCOON_ERR_INVALID_ARGUMENT: return "invalid argument";
    case COCOON_ERR_PARSE: return "parse error";
    case COCOON_ERR_SCHEMA: return "schema error";
    case COCOON_ERR_IO: return "i/o error";
    case COCOON_ERR_DEGENERATE: return "degenerate input";
    case COCOON_ERR_NUMERIC: return "numeric failure";
    case COCOON_ERR_NOT_FOUND: return "not found";
    case COCOON_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* cocoon_last_error(void) { return g_last_error.c_str(); }

// ---- corpus ---------------------------------------------------------------

cocoon_status cocoon_corpus_parse_file(const char* path, cocoon_corpus** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto in = open_in(path);
    auto c = std::make_unique<cocoon_corpus>();
    c->corpus = cocoon::parse_event_log(in, cocoon::guess_event_format(path));
    *out = c.release();
  });
}

cocoon_status cocoon_corpus_load_categories(cocoon_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus, "corpus");
    auto in = open_in(path);
    cocoon::attach_category_map(corpus->corpus, cocoon::load_category_map(in));
  });
}

cocoon_status cocoon_corpus_load_covariates(cocoon_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus, "corpus");
    auto in = open_in(path);
    cocoon::attach_covariates(corpus->corpus, in);
  });
}

cocoon_status cocoon_corpus_save(const cocoon_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus, "corpus");
    auto out = open_out(path, true);
    cocoon::save_corpus(corpus->corpus, out);
    close_out(out, path);
  });
}

cocoon_status cocoon_corpus_load(const char* path, cocoon_corpus** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto in = open_in(path, true);
    auto c = std::make_unique<cocoon_corpus>();
    c->corpus = cocoon::load_corpus(in);
    *out = c.release();
  });
}

cocoon_status cocoon_corpus_counts(const cocoon_corpus* corpus, size_t* users,
                                   size_t* events) {
  return guarded([&] {
    require(corpus, "corpus");
    if (users) *users = corpus->corpus.users.size();
    if (events) *events = corpus->corpus.event_count();
  });
}

void cocoon_corpus_free(cocoon_corpus* corpus) { delete corpus; }

// ---- training ---------------------------------------------------------------

void cocoon_train_config_default(cocoon_train_config* config) {
  if (!config) return;
  const cocoon::TrainingConfig t = cocoon::default_config();
  config->dim = t.dim;
  config->min_count = t.min_count;
  config->epochs = t.epochs;
  config->negative = t.negative;
  config->window = t.window;
  config->shrink_window = t.shrink_window ? 1 : 0;
  config->lr_start = t.lr_start;
  config->lr_end = t.lr_end;
  config->seed = t.seed;
  config->workers = t.workers;
}

cocoon_status cocoon_train(const cocoon_corpus* corpus, const cocoon_train_config* config,
                           cocoon_space** out) {
  return guarded([&] {
    require(corpus, "corpus");
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    auto s = std::make_unique<cocoon_space>();
    s->space = cocoon::train(corpus->corpus, to_config(*config));
    *out = s.release();
  });
}

// ---- space ------------------------------------------------------------------

cocoon_status cocoon_space_save(const cocoon_space* space, const char* path) {
  return guarded([&] {
    require(space, "space");
    auto out = open_out(path);
    cocoon::write_space(space->space, out);
    close_out(out, path);
  });
}

cocoon_status cocoon_space_load(const char* path, cocoon_space** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto in = open_in(path);
    auto s = std::make_unique<cocoon_space>();
    s->space = cocoon::read_space(in);
    *out = s.release();
  });
}

cocoon_status cocoon_space_normalize(const cocoon_space* space, cocoon_space** out) {
  return guarded([&] {
    require(space, "space");
    require(out, "out");
    *out = nullptr;
    auto s = std::make_unique<cocoon_space>();
    s->space = cocoon::normalize_space(space->space);
    *out = s.release();
  });
}

cocoon_status cocoon_space_shape(const cocoon_space* space, size_t* dim, size_t* items,
                                 size_t* users) {
  return guarded([&] {
    require(space, "space");
    if (dim) *dim = space->space.dim();
    if (items) *items = space->space.item_count();
    if (users) *users = space->space.user_count();
  });
}

cocoon_status cocoon_space_user_vector(const cocoon_space* space, const char* user_id,
                                       double* out, size_t dim) {
  return guarded([&] {
    require(space, "space");
    require(user_id, "user_id");
    require(out, "out");
    const auto idx = space->space.user_index(user_id);
    if (!idx) cocoon::fail(cocoon::ErrorKind::kNotFound, "unknown user '", user_id, "'");
    const auto v = space->space.user_vector(*idx);
    if (dim != v.size()) {
      cocoon::fail(cocoon::ErrorKind::kInvalidArgument, "buffer holds ", dim,
                   " values, space has dim ", v.size());
    }
    std::copy(v.begin(), v.end(), out);
  });
}

cocoon_status cocoon_space_item_vector(const cocoon_space* space, const char* item_id,
                                       double* out, size_t dim) {
  return guarded([&] {
    require(space, "space");
    require(item_id, "item_id");
    require(out, "out");
    const auto idx = space->space.item_index(item_id);
    if (!idx) cocoon::fail(cocoon::ErrorKind::kNotFound, "unknown item '", item_id, "'");
    const auto v = space->space.item_vector(*idx);
    if (dim != v.size()) {
      cocoon::fail(cocoon::ErrorKind::kInvalidArgument, "buffer holds ", dim,
                   " values, space has dim ", v.size());
    }
    std::copy(v.begin(), v.end(), out);
  });
}

cocoon_status cocoon_space_nearest_items(const cocoon_space* space, const char* item_id,
                                         size_t k, const char** ids, double* cosines,
                                         size_t* found) {
  return guarded([&] {
    require(space, "space");
    require(item_id, "item_id");
    require(found, "found");
    *found = 0;
    if (k > 0) {
      require(ids, "ids");
      require(cosines, "cosines");
    }
    const auto hits = cocoon::nearest_items(space->space, item_id, k);
    for (const auto& h : hits) {
      const auto idx = space->space.item_index(h.item_id);
      ids[*found] = space->space.item_ids()[*idx].c_str();
      cosines[*found] = h.similarity;
      ++*found;
    }
  });
}

void cocoon_space_free(cocoon_space* space) { delete space; }

// ---- metrics ------------------------------------------------------------------

cocoon_status cocoon_metrics_compute(const cocoon_corpus* corpus,
                                     const cocoon_space* normalized_space,
                                     cocoon_distance distance, int consumed_only,
                                     cocoon_metrics** out) {
  return guarded([&] {
    require(corpus, "corpus");
    require(normalized_space, "space");
    require(out, "out");
    *out = nullptr;
    cocoon::MetricsOptions opts;
    if (distance == COCOON_DISTANCE_COSINE) {
      opts.metric = cocoon::DistanceMetric::kCosine;
    } else if (distance != COCOON_DISTANCE_EUCLIDEAN) {
      cocoon::fail(cocoon::ErrorKind::kInvalidArgument, "unknown distance ",
                   static_cast<int>(distance));
    }
    opts.consumed_only = consumed_only != 0;
    auto m = std::make_unique<cocoon_metrics>();
    m->rows = cocoon::compute_cohort_metrics(corpus->corpus, normalized_space->space, opts);
    *out = m.release();
  });
}

cocoon_status cocoon_metrics_count(const cocoon_metrics* metrics, size_t* rows) {
  return guarded([&] {
    require(metrics, "metrics");
    require(rows, "rows");
    *rows = metrics->rows.size();
  });
}

cocoon_status cocoon_metrics_get(const cocoon_metrics* metrics, size_t row, const char* column,
                                 double* value, int* present) {
  return guarded([&] {
    require(metrics, "metrics");
    require(column, "column");
    require(value, "value");
    if (row >= metrics->rows.size()) {
      cocoon::fail(cocoon::ErrorKind::kInvalidArgument, "row ", row, " out of range");
    }
    const auto v = cocoon::metric_value(metrics->rows[row], column);
    *value = v.value_or(0.0);
    if (present) *present = v ? 1 : 0;
  });
}

cocoon_status cocoon_metrics_user_id(const cocoon_metrics* metrics, size_t row,
                                     const char** user_id) {
  return guarded([&] {
    require(metrics, "metrics");
    require(user_id, "user_id");
    if (row >= metrics->rows.size()) {
      cocoon::fail(cocoon::ErrorKind::kInvalidArgument, "row ", row, " out of range");
    }
    *user_id = metrics->rows[row].user_id.c_str();
  });
}

cocoon_status cocoon_metrics_write_csv(const cocoon_metrics* metrics, const char* path) {
  return guarded([&] {
    require(metrics, "metrics");
    auto out = open_out(path);
    cocoon::write_metrics_csv(metrics->rows, out);
    close_out(out, path);
  });
}

void cocoon_metrics_free(cocoon_metrics* metrics) { delete metrics; }

// ---- statistics ---------------------------------------------------------------

cocoon_status cocoon_paired_t_test(const double* a, const double* b, size_t n,
                                   cocoon_t_test* out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(a, "a");
      require(b, "b");
    }
    const auto r = cocoon::paired_t_test({a, n}, {b, n});
    *out = cocoon_t_test{r.t, r.df, r.p, r.mean_diff, r.n};
  });
}

cocoon_status cocoon_t_tail_p(double t, double df, double* p) {
  return guarded([&] {
    require(p, "p");
    *p = cocoon::t_tail_p(t, df);
  });
}

cocoon_status cocoon_ols_fit(const double* x, const double* y, size_t n, size_t p,
                             double* estimates, double* standard_errors, double* p_values,
                             double* r_squared) {
  return guarded([&] {
    if (n > 0) {
      require(y, "y");
      if (p > 0) require(x, "x");
    }
    cocoon::Matrix m(n, p);
    std::copy(x, x + n * p, m.data().begin());
    const auto fit = cocoon::ols_fit(m, {y, n});
    for (std::size_t c = 0; c < fit.coefficients.size(); ++c) {
      if (estimates) estimates[c] = fit.coefficients[c].estimate;
      if (standard_errors) standard_errors[c] = fit.coefficients[c].se;
      if (p_values) p_values[c] = fit.coefficients[c].p;
    }
    if (r_squared) *r_squared = fit.r_squared;
  });
}

cocoon_status cocoon_constrained_shuffle(uint32_t* items, size_t n, uint64_t seed,
                                         int* feasible) {
  return guarded([&] {
    if (n > 0) require(items, "items");
    cocoon::Rng rng(seed);
    const auto r = cocoon::constrained_shuffle({items, n}, rng);
    if (feasible) *feasible = r.feasible ? 1 : 0;
    if (r.feasible) std::copy(r.sequence.begin(), r.sequence.end(), items);
  });
}

// ---- pipeline -----------------------------------------------------------------

cocoon_status cocoon_pipeline_create(cocoon_pipeline** out) {
  return guarded([&] {
    require(out, "out");
    *out = new cocoon_pipeline();
  });
}

cocoon_status cocoon_pipeline_set(cocoon_pipeline* pipeline, const char* key,
                                  const char* value) {
  return guarded([&] {
    require(pipeline, "pipeline");
    require(key, "key");
    require(value, "value");
    pipeline->config.set(key, value);
  });
}

cocoon_status cocoon_pipeline_load_config(cocoon_pipeline* pipeline, const char* path) {
  return guarded([&] {
    require(pipeline, "pipeline");
    require(path, "path");
    cocoon::load_config_file(path, pipeline->config);
  });
}

cocoon_status cocoon_pipeline_apply_environment(cocoon_pipeline* pipeline) {
  return guarded([&] {
    require(pipeline, "pipeline");
    cocoon::apply_environment(pipeline->config);
  });
}

cocoon_status cocoon_pipeline_run(cocoon_pipeline* pipeline, const char* stage, int verbose) {
  return guarded([&] {
    require(pipeline, "pipeline");
    require(stage, "stage");
    cocoon::run_stage(stage, pipeline->config, verbose ? &std::cerr : nullptr);
  });
}

void cocoon_pipeline_free(cocoon_pipeline* pipeline) { delete pipeline; }

}  // extern "C"
