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

// Command-line driver for the analysis pipeline.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cocoon/cocoon.h"

namespace {

struct Pipeline {
  cocoon_pipeline* handle = nullptr;
  ~Pipeline() { cocoon_pipeline_free(handle); }
};

int report(cocoon_status status, const char* context) {
  std::fprintf(stderr, "cocoon: %s: %s (%s)\n", context, cocoon_last_error(),
               cocoon_status_string(status));
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-cocoon analysis of consumption logs"};
  app.set_version_flag("--version", std::string(cocoon_version()));
  app.require_subcommand(1, 1);

  std::string config_path;
  bool verbose = false;
  // Flag values are kept as text and handed to the pipeline, which owns
  // parsing and validation.
  std::map<std::string, std::string> values;
  bool consumed_only = false;
  bool fixed_window = false;

  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", verbose, "progress on stderr");

  const std::vector<std::pair<const char*, const char*>> options = {
      {"out", "output directory"},
      {"events", "event log (csv or jsonl) for ingest"},
      {"categories", "category map for ingest"},
      {"covariates", "user covariates csv for ingest"},
      {"dim", "embedding dimension"},
      {"epochs", "training epochs"},
      {"min-count", "minimum item count kept in the vocabulary"},
      {"negative", "negative samples per example"},
      {"window", "item context window"},
      {"lr-start", "initial learning rate"},
      {"lr-end", "final learning rate"},
      {"seed", "random seed"},
      {"workers", "training threads / concurrent null repetitions"},
      {"reps", "null-model repetitions"},
      {"distance", "euclidean or cosine"},
      {"dv", "dependent variable for regress"},
      {"iv", "comma-separated predictors for regress"},
      {"item", "query item for neighbors"},
      {"k", "neighbour count"},
      {"components", "projection components"},
      {"synth-users", "synthetic users"},
      {"synth-genres", "synthetic genres"},
      {"synth-items", "items per synthetic genre"},
      {"synth-min-length", "shortest synthetic sequence"},
      {"synth-max-length", "longest synthetic sequence"},
      {"synth-persistence", "probability a synthetic event keeps the previous genre"},
  };
  for (const auto& [name, help] : options) {
    auto* opt = app.add_option(std::string("--") + name, values[name], help);
    if (std::string(name) == "distance") {
      opt->check(CLI::IsMember({"euclidean", "cosine"}));
    }
  }
  app.add_flag("--consumed-only", consumed_only,
               "item extremes over the user's own items only");
  app.add_flag("--fixed-window", fixed_window, "always use the full context window");

  const char* stages[][2] = {
      {"synth", "write a synthetic corpus (events, ground truth, categories, covariates)"},
      {"ingest", "parse the event log into corpus.bin"},
      {"train", "train the embedding into space.tsv"},
      {"metrics", "per-user cocoon metrics into metrics.csv"},
      {"null", "shuffle null ensemble into null_ensemble/"},
      {"test", "paired test of observed vs expected radius"},
      {"regress", "OLS of a metric on covariates into regression.csv"},
      {"report", "aggregate results into summary.json"},
      {"neighbors", "nearest items of --item into neighbors.csv"},
      {"project", "principal-component coordinates into projection.csv"},
      {"all", "ingest through report"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help)->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  Pipeline p;
  cocoon_status st = cocoon_pipeline_create(&p.handle);
  if (st != COCOON_OK) return report(st, "init");
  if (!config_path.empty()) {
    st = cocoon_pipeline_load_config(p.handle, config_path.c_str());
    if (st != COCOON_OK) return report(st, "config");
  }
  st = cocoon_pipeline_apply_environment(p.handle);
  if (st != COCOON_OK) return report(st, "COCOON_SEED");
  for (const auto& [name, help] : options) {
    if (app.count(std::string("--") + name) == 0) continue;
    st = cocoon_pipeline_set(p.handle, name, values[name].c_str());
    if (st != COCOON_OK) return report(st, name);
  }
  if (consumed_only) cocoon_pipeline_set(p.handle, "consumed-only", "true");
  if (fixed_window) cocoon_pipeline_set(p.handle, "shrink-window", "false");

  st = cocoon_pipeline_run(p.handle, stage.c_str(), verbose ? 1 : 0);
  if (st != COCOON_OK) return report(st, stage.c_str());
  return 0;
}
