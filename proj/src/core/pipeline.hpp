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

// File-based analysis pipeline. Every stage reads its inputs from and writes
// its outputs to the output directory.

#ifndef COCOON_CORE_PIPELINE_HPP_
#define COCOON_CORE_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "embedding.hpp"
#include "geometry.hpp"
#include "synth.hpp"

namespace cocoon {

struct PipelineConfig {
  std::filesystem::path out_dir = "cocoon_out";
  // Inputs for `ingest`. Empty paths fall back to the files `synth` writes
  // into out_dir; categories and covariates are optional there.
  std::filesystem::path events;
  std::filesystem::path categories;
  std::filesystem::path covariates;

  TrainingConfig training;  // seed is taken from `seed`
  std::size_t reps = 10;
  DistanceMetric distance = DistanceMetric::kEuclidean;
  bool consumed_only = false;
  std::uint64_t seed = 1;

  // regress
  std::string dv = "range";
  std::vector<std::string> iv = {"class_proxy", "category_count"};
  // neighbors / project
  std::string item;
  std::size_t k = 10;
  std::size_t components = 2;

  // synth
  std::size_t synth_users = 500;  // split evenly between the two groups
  std::size_t synth_genres = 10;
  std::size_t synth_items = 50;
  std::size_t synth_min_length = 100;
  std::size_t synth_max_length = 300;
  double synth_persistence = 0.8;

  // Sets one option by its config-file key (the long flag name without
  // dashes, e.g. `min-count`). Throws kInvalidArgument on unknown keys or bad
  // values.
  void set(std::string_view key, std::string_view value);
  void validate() const;
  TrainingConfig training_config() const;
  SynthParams synth_params() const;
};

// Flat `key = value` lines; `#` starts a comment.
void load_config(std::istream& in, PipelineConfig& config);
void load_config_file(const std::filesystem::path& path, PipelineConfig& config);
// Applies COCOON_SEED when set.
void apply_environment(PipelineConfig& config);

inline constexpr std::string_view kStages[] = {
    "synth", "ingest", "train", "metrics", "null",     "test",
    "regress", "report", "neighbors", "project", "all"};

bool is_stage(std::string_view name);

// Runs one stage. `all` runs ingest through report. Progress lines go to
// `log` when given.
void run_stage(std::string_view stage, const PipelineConfig& config,
               std::ostream* log = nullptr);

namespace artifacts {
inline constexpr const char* kEvents = "events.csv";
inline constexpr const char* kGroundTruth = "ground_truth.csv";
inline constexpr const char* kCategories = "categories.csv";
inline constexpr const char* kCovariates = "covariates.csv";
inline constexpr const char* kCorpus = "corpus.bin";
inline constexpr const char* kSpace = "space.tsv";
inline constexpr const char* kMetrics = "metrics.csv";
inline constexpr const char* kNullDir = "null_ensemble";
inline constexpr const char* kExpected = "expected.csv";
inline constexpr const char* kTest = "cocoon_test.json";
inline constexpr const char* kHistogram = "radius_hist.csv";
inline constexpr const char* kRegression = "regression.csv";
inline constexpr const char* kSummary = "summary.json";
inline constexpr const char* kNeighbors = "neighbors.csv";
inline constexpr const char* kProjection = "projection.csv";
}  // namespace artifacts

}  // namespace cocoon

#endif  // COCOON_CORE_PIPELINE_HPP_
