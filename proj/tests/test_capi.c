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

/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "cocoon/cocoon.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define EXPECT_OK(call)                                                      \
  do {                                                                       \
    cocoon_status s_ = (call);                                               \
    if (s_ != COCOON_OK) {                                                   \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,    \
              cocoon_status_string(s_), cocoon_last_error());                \
      ++failures;                                                            \
    }                                                                        \
  } while (0)

static void write_text(const char* path, const char* text) {
  FILE* f = fopen(path, "w");
  if (!f) {
    perror(path);
    exit(2);
  }
  fputs(text, f);
  fclose(f);
}

static void test_errors(void) {
  cocoon_corpus* c = NULL;
  EXPECT(cocoon_corpus_parse_file("/nonexistent/events.csv", &c) == COCOON_ERR_NOT_FOUND);
  EXPECT(c == NULL);
  EXPECT(strstr(cocoon_last_error(), "/nonexistent/events.csv") != NULL);
  EXPECT(cocoon_corpus_parse_file(NULL, &c) == COCOON_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(cocoon_status_string(COCOON_ERR_PARSE)) > 0);
  EXPECT(strlen(cocoon_version()) > 0);
  cocoon_corpus_free(NULL);
  cocoon_space_free(NULL);
}

static void test_stats(void) {
  double a[3] = {1, 2, 3}, b[3] = {0, 0, 0};
  cocoon_t_test t;
  EXPECT_OK(cocoon_paired_t_test(a, b, 3, &t));
  EXPECT(fabs(t.t - 2.0 * sqrt(3.0)) < 1e-12);
  EXPECT(t.df == 2.0);
  EXPECT(cocoon_paired_t_test(a, a, 3, &t) == COCOON_ERR_DEGENERATE);

  double p = 0;
  EXPECT_OK(cocoon_t_tail_p(1.0, 1.0, &p));
  EXPECT(fabs(p - 0.5) < 1e-10);

  double x[3] = {1, 2, 3}, y[3] = {1, 2, 2};
  double est[2], se[2], pv[2], r2;
  EXPECT_OK(cocoon_ols_fit(x, y, 3, 1, est, se, pv, &r2));
  EXPECT(fabs(est[0] - 2.0 / 3.0) < 1e-10);
  EXPECT(fabs(est[1] - 0.5) < 1e-10);
  EXPECT(fabs(r2 - 0.75) < 1e-10);

  uint32_t items[3] = {0, 0, 1};
  int feasible = 0;
  EXPECT_OK(cocoon_constrained_shuffle(items, 3, 5, &feasible));
  EXPECT(feasible == 1);
  EXPECT(items[0] == 0 && items[1] == 1 && items[2] == 0);
  uint32_t bad[4] = {0, 0, 0, 1};
  EXPECT_OK(cocoon_constrained_shuffle(bad, 4, 5, &feasible));
  EXPECT(feasible == 0);
}

static void test_corpus_to_metrics(const char* dir) {
  char events[512], cats[512], space_path[512], metrics_path[512];
  snprintf(events, sizeof events, "%s/events.csv", dir);
  snprintf(cats, sizeof cats, "%s/categories.csv", dir);
  snprintf(space_path, sizeof space_path, "%s/space.tsv", dir);
  snprintf(metrics_path, sizeof metrics_path, "%s/metrics.csv", dir);

  write_text(events,
             "user_id,timestamp,item_id,category\n"
             "u1,1,a,fun\nu1,2,b,fun\nu1,3,a,fun\nu1,4,c,work\n"
             "u2,1,c,work\nu2,2,d,work\nu2,3,c,work\nu2,4,a,fun\n");
  write_text(cats,
             "item_id,category\na,fun\nb,fun\nc,work\nd,work\n"
             "category,is_entertainment\nfun,1\nwork,0\n");

  cocoon_corpus* corpus = NULL;
  EXPECT_OK(cocoon_corpus_parse_file(events, &corpus));
  EXPECT_OK(cocoon_corpus_load_categories(corpus, cats));
  size_t users = 0, n_events = 0;
  EXPECT_OK(cocoon_corpus_counts(corpus, &users, &n_events));
  EXPECT(users == 2 && n_events == 8);

  cocoon_train_config cfg;
  cocoon_train_config_default(&cfg);
  EXPECT(cfg.dim == 300 && cfg.epochs == 70 && cfg.negative == 5 && cfg.window == 5);
  cfg.dim = 6;
  cfg.epochs = 5;
  cocoon_space* raw = NULL;
  EXPECT_OK(cocoon_train(corpus, &cfg, &raw));
  cfg.epochs = 0;
  cocoon_space* none = NULL;
  EXPECT(cocoon_train(corpus, &cfg, &none) == COCOON_ERR_INVALID_ARGUMENT);
  EXPECT(none == NULL);

  cocoon_space* space = NULL;
  EXPECT_OK(cocoon_space_normalize(raw, &space));
  size_t dim = 0, n_items = 0, n_users = 0;
  EXPECT_OK(cocoon_space_shape(space, &dim, &n_items, &n_users));
  EXPECT(dim == 6 && n_items == 4 && n_users == 2);

  double v[6];
  EXPECT_OK(cocoon_space_user_vector(space, "u1", v, 6));
  double len = 0;
  for (int i = 0; i < 6; ++i) len += v[i] * v[i];
  EXPECT(fabs(len - 1.0) < 1e-12);
  EXPECT(cocoon_space_item_vector(space, "zzz", v, 6) == COCOON_ERR_NOT_FOUND);
  EXPECT(cocoon_space_item_vector(space, "a", v, 3) == COCOON_ERR_INVALID_ARGUMENT);

  const char* ids[3];
  double cos[3];
  size_t found = 0;
  EXPECT_OK(cocoon_space_nearest_items(space, "a", 3, ids, cos, &found));
  EXPECT(found == 3);
  EXPECT(cos[0] >= cos[1] && cos[1] >= cos[2]);

  EXPECT_OK(cocoon_space_save(space, space_path));
  cocoon_space* back = NULL;
  EXPECT_OK(cocoon_space_load(space_path, &back));
  double w[6];
  EXPECT_OK(cocoon_space_user_vector(back, "u1", w, 6));
  EXPECT(memcmp(v, w, sizeof v) == 0);

  cocoon_metrics* m = NULL;
  EXPECT_OK(cocoon_metrics_compute(corpus, space, COCOON_DISTANCE_EUCLIDEAN, 0, &m));
  size_t rows = 0;
  EXPECT_OK(cocoon_metrics_count(m, &rows));
  EXPECT(rows == 2);
  const char* uid = NULL;
  EXPECT_OK(cocoon_metrics_user_id(m, 0, &uid));
  EXPECT(uid && strcmp(uid, "u1") == 0);
  double value = 0;
  int present = 0;
  EXPECT_OK(cocoon_metrics_get(m, 0, "rel_ent_pref", &value, &present));
  EXPECT(present == 1 && fabs(value - 0.75) < 1e-12);
  EXPECT_OK(cocoon_metrics_get(m, 1, "category_count", &value, &present));
  EXPECT(present == 1 && value == 2.0);
  EXPECT_OK(cocoon_metrics_get(m, 0, "r_g", &value, &present));
  EXPECT(present == 1 && value >= 0.0);
  EXPECT(cocoon_metrics_get(m, 5, "r_g", &value, &present) == COCOON_ERR_INVALID_ARGUMENT);
  EXPECT_OK(cocoon_metrics_write_csv(m, metrics_path));

  cocoon_metrics_free(m);
  cocoon_space_free(back);
  cocoon_space_free(space);
  cocoon_space_free(raw);
  cocoon_corpus_free(corpus);
}

static void test_pipeline(const char* dir) {
  cocoon_pipeline* p = NULL;
  EXPECT_OK(cocoon_pipeline_create(&p));
  char out[512];
  snprintf(out, sizeof out, "%s/never_written", dir);
  EXPECT_OK(cocoon_pipeline_set(p, "out", out));
  EXPECT(cocoon_pipeline_set(p, "nonsense", "1") == COCOON_ERR_INVALID_ARGUMENT);
  EXPECT(cocoon_pipeline_run(p, "train", 0) == COCOON_ERR_NOT_FOUND);
  EXPECT(strstr(cocoon_last_error(), "corpus.bin") != NULL);
  EXPECT(cocoon_pipeline_run(p, "bogus", 0) == COCOON_ERR_INVALID_ARGUMENT);

  snprintf(out, sizeof out, "%s/pipeline", dir);
  EXPECT_OK(cocoon_pipeline_set(p, "out", out));

  EXPECT_OK(cocoon_pipeline_set(p, "synth-users", "12"));
  EXPECT_OK(cocoon_pipeline_set(p, "synth-min-length", "20"));
  EXPECT_OK(cocoon_pipeline_set(p, "synth-max-length", "30"));
  EXPECT_OK(cocoon_pipeline_set(p, "dim", "4"));
  EXPECT_OK(cocoon_pipeline_set(p, "epochs", "2"));
  EXPECT_OK(cocoon_pipeline_run(p, "synth", 0));
  EXPECT_OK(cocoon_pipeline_run(p, "ingest", 0));
  EXPECT_OK(cocoon_pipeline_run(p, "train", 0));
  cocoon_pipeline_free(p);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  test_errors();
  test_stats();
  test_corpus_to_metrics(dir);
  test_pipeline(dir);
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}
