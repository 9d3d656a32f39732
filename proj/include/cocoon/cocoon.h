/*
 * Copyright 2026 The Cocoon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the cocoon library.
 *
 * Every function returns a cocoon_status. On failure a message describing the
 * error is available from cocoon_last_error() on the calling thread until the
 * next call into the library from that thread. Handles are opaque; free each
 * one with its matching *_free function (passing NULL is allowed).
 */

#ifndef COCOON_COCOON_H_
#define COCOON_COCOON_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(COCOON_BUILDING_LIBRARY)
#define COCOON_API __declspec(dllexport)
#else
#define COCOON_API __declspec(dllimport)
#endif
#else
#define COCOON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cocoon_status {
  COCOON_OK = 0,
  COCOON_ERR_INVALID_ARGUMENT = 1,
  COCOON_ERR_PARSE = 2,
  COCOON_ERR_SCHEMA = 3,
  COCOON_ERR_IO = 4,
  COCOON_ERR_DEGENERATE = 5,
  COCOON_ERR_NUMERIC = 6,
  COCOON_ERR_NOT_FOUND = 7,
  COCOON_ERR_INTERNAL = 99
} cocoon_status;

typedef struct cocoon_corpus cocoon_corpus;
typedef struct cocoon_space cocoon_space;
typedef struct cocoon_metrics cocoon_metrics;
typedef struct cocoon_pipeline cocoon_pipeline;

typedef enum cocoon_distance {
  COCOON_DISTANCE_EUCLIDEAN = 0,
  COCOON_DISTANCE_COSINE = 1
} cocoon_distance;

COCOON_API const char* cocoon_version(void);
COCOON_API const char* cocoon_status_string(cocoon_status status);
/* Message for the last failed call on this thread ("" if none). */
COCOON_API const char* cocoon_last_error(void);

/* ---- corpus ------------------------------------------------------------ */

/* CSV or JSONL event log; the format follows the file extension. */
COCOON_API cocoon_status cocoon_corpus_parse_file(const char* path, cocoon_corpus** out);
/* Category map file with an `item_id,category` section followed by a
 * `category,is_entertainment` section. */
COCOON_API cocoon_status cocoon_corpus_load_categories(cocoon_corpus* corpus,
                                                       const char* path);
/* `user_id,<covariate>...` CSV. */
COCOON_API cocoon_status cocoon_corpus_load_covariates(cocoon_corpus* corpus,
                                                       const char* path);
COCOON_API cocoon_status cocoon_corpus_save(const cocoon_corpus* corpus, const char* path);
COCOON_API cocoon_status cocoon_corpus_load(const char* path, cocoon_corpus** out);
COCOON_API cocoon_status cocoon_corpus_counts(const cocoon_corpus* corpus, size_t* users,
                                              size_t* events);
COCOON_API void cocoon_corpus_free(cocoon_corpus* corpus);

/* ---- training ---------------------------------------------------------- */

typedef struct cocoon_train_config {
  size_t dim;
  uint64_t min_count;
  size_t epochs;
  size_t negative;
  size_t window;
  int shrink_window;
  double lr_start;
  double lr_end;
  uint64_t seed;
  size_t workers;
} cocoon_train_config;

COCOON_API void cocoon_train_config_default(cocoon_train_config* config);
COCOON_API cocoon_status cocoon_train(const cocoon_corpus* corpus,
                                      const cocoon_train_config* config,
                                      cocoon_space** out);

/* ---- embedding space --------------------------------------------------- */

COCOON_API cocoon_status cocoon_space_save(const cocoon_space* space, const char* path);
COCOON_API cocoon_status cocoon_space_load(const char* path, cocoon_space** out);
/* Returns a unit-length copy of every vector. */
COCOON_API cocoon_status cocoon_space_normalize(const cocoon_space* space, cocoon_space** out);
COCOON_API cocoon_status cocoon_space_shape(const cocoon_space* space, size_t* dim,
                                            size_t* items, size_t* users);
/* Copies `dim` values into `out`. */
COCOON_API cocoon_status cocoon_space_user_vector(const cocoon_space* space,
                                                  const char* user_id, double* out,
                                                  size_t dim);
COCOON_API cocoon_status cocoon_space_item_vector(const cocoon_space* space,
                                                  const char* item_id, double* out,
                                                  size_t dim);
/* Fills up to `k` neighbours; ids point into the space and stay valid while
 * it lives. `*found` receives the number written. */
COCOON_API cocoon_status cocoon_space_nearest_items(const cocoon_space* space,
                                                    const char* item_id, size_t k,
                                                    const char** ids, double* cosines,
                                                    size_t* found);
COCOON_API void cocoon_space_free(cocoon_space* space);

/* ---- metrics ----------------------------------------------------------- */

COCOON_API cocoon_status cocoon_metrics_compute(const cocoon_corpus* corpus,
                                                const cocoon_space* normalized_space,
                                                cocoon_distance distance,
                                                int consumed_only, cocoon_metrics** out);
COCOON_API cocoon_status cocoon_metrics_count(const cocoon_metrics* metrics, size_t* rows);
/* Column by metrics-file name (`r_g`, `range`, ... or a covariate). Missing
 * values set `*present` to 0. */
COCOON_API cocoon_status cocoon_metrics_get(const cocoon_metrics* metrics, size_t row,
                                            const char* column, double* value,
                                            int* present);
COCOON_API cocoon_status cocoon_metrics_user_id(const cocoon_metrics* metrics, size_t row,
                                                const char** user_id);
COCOON_API cocoon_status cocoon_metrics_write_csv(const cocoon_metrics* metrics,
                                                  const char* path);
COCOON_API void cocoon_metrics_free(cocoon_metrics* metrics);

/* ---- statistics -------------------------------------------------------- */

typedef struct cocoon_t_test {
  double t;
  double df;
  double p;
  double mean_diff;
  size_t n;
} cocoon_t_test;

COCOON_API cocoon_status cocoon_paired_t_test(const double* a, const double* b, size_t n,
                                              cocoon_t_test* out);
COCOON_API cocoon_status cocoon_t_tail_p(double t, double df, double* p);

/* `x` is row-major n x p (no intercept column). Outputs have p + 1 entries,
 * intercept first. */
COCOON_API cocoon_status cocoon_ols_fit(const double* x, const double* y, size_t n, size_t p,
                                        double* estimates, double* standard_errors,
                                        double* p_values, double* r_squared);

/* Permutes `items` in place so that no two neighbours are equal. `*feasible`
 * is 0 (and the input untouched) when no such arrangement exists. */
COCOON_API cocoon_status cocoon_constrained_shuffle(uint32_t* items, size_t n, uint64_t seed,
                                                    int* feasible);

/* ---- pipeline ---------------------------------------------------------- */

COCOON_API cocoon_status cocoon_pipeline_create(cocoon_pipeline** out);
/* Same keys as the config file (`dim`, `epochs`, `min-count`, `out`, ...). */
COCOON_API cocoon_status cocoon_pipeline_set(cocoon_pipeline* pipeline, const char* key,
                                             const char* value);
COCOON_API cocoon_status cocoon_pipeline_load_config(cocoon_pipeline* pipeline,
                                                     const char* path);
/* Applies COCOON_SEED from the environment when set. */
COCOON_API cocoon_status cocoon_pipeline_apply_environment(cocoon_pipeline* pipeline);
/* Progress lines are written to stderr when `verbose` is non-zero. */
COCOON_API cocoon_status cocoon_pipeline_run(cocoon_pipeline* pipeline, const char* stage,
                                             int verbose);
COCOON_API void cocoon_pipeline_free(cocoon_pipeline* pipeline);

#ifdef __cplusplus
}
#endif

#endif /* COCOON_COCOON_H_ */
