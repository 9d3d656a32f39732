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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "doctest.h"
#include "pipeline.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using cocoon::ErrorKind;
using testing::error_kind;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("cocoon_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

cocoon::PipelineConfig small_config(const fs::path& out) {
  cocoon::PipelineConfig c;
  std::istringstream text(
      "dim = 8\n"
      "epochs = 3\n"
      "reps = 2\n"
      "synth-users = 30\n"
      "synth-genres = 4\n"
      "synth-items = 10\n"
      "synth-min-length = 30\n"
      "synth-max-length = 50\n"
      "iv = class_proxy,category_count\n");
  cocoon::load_config(text, c);
  c.out_dir = out;
  return c;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing") {
  cocoon::PipelineConfig c;
  std::istringstream text(
      "# comment\n"
      "\n"
      "dim = 12   # trailing\n"
      "min_count=2\n"
      "distance = cosine\n"
      "consumed-only = true\n"
      "iv = a, b ,c\n");
  cocoon::load_config(text, c);
  CHECK(c.training.dim == 12);
  CHECK(c.training.min_count == 2);
  CHECK(c.distance == cocoon::DistanceMetric::kCosine);
  CHECK(c.consumed_only);
  CHECK(c.iv == std::vector<std::string>{"a", "b", "c"});

  std::istringstream bad("dim = 4\nbogus = 1\n");
  try {
    cocoon::load_config(bad, c);
    FAIL("expected an error");
  } catch (const cocoon::ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK(error_kind([&] { c.set("epochs", "many"); }) == ErrorKind::kInvalidArgument);
  CHECK(error_kind([&] { c.set("distance", "l1"); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("seed flows into training and synthesis") {
  cocoon::PipelineConfig c;
  c.set("seed", "99");
  CHECK(c.training_config().seed == 99);
  CHECK(c.synth_params().seed == 99);
  c.set("synth-users", "11");
  CHECK(c.synth_params().user_count() == 11);

  ::setenv("COCOON_SEED", "1234", 1);
  cocoon::apply_environment(c);
  ::unsetenv("COCOON_SEED");
  CHECK(c.seed == 1234);

  ::setenv("COCOON_SEED", "x", 1);
  CHECK(error_kind([&] { cocoon::apply_environment(c); }) == ErrorKind::kInvalidArgument);
  ::unsetenv("COCOON_SEED");
}

TEST_CASE("missing upstream artifact names the file") {
  TempDir dir("missing");
  auto c = small_config(dir.path);
  auto msg = testing::error_message([&] { cocoon::run_stage("metrics", c); });
  CHECK(msg.find("corpus.bin") != std::string::npos);
  cocoon::run_stage("synth", c);
  cocoon::run_stage("ingest", c);
  msg = testing::error_message([&] { cocoon::run_stage("metrics", c); });
  CHECK(msg.find("space.tsv") != std::string::npos);
  CHECK(msg.find("train") != std::string::npos);
  CHECK(error_kind([&] { cocoon::run_stage("metrics", c); }) == ErrorKind::kNotFound);
  CHECK(error_kind([&] { cocoon::run_stage("dance", c); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("end to end on a small corpus") {
  TempDir dir("e2e");
  auto c = small_config(dir.path);
  cocoon::run_stage("synth", c);
  cocoon::run_stage("all", c);
  for (const char* f : {cocoon::artifacts::kEvents, cocoon::artifacts::kGroundTruth,
                        cocoon::artifacts::kCorpus, cocoon::artifacts::kSpace,
                        cocoon::artifacts::kMetrics, cocoon::artifacts::kTest,
                        cocoon::artifacts::kHistogram, cocoon::artifacts::kRegression,
                        cocoon::artifacts::kSummary}) {
    CAPTURE(f);
    REQUIRE(fs::exists(dir.path / f));
    CHECK(fs::file_size(dir.path / f) > 0);
  }
  const auto null_dir = dir.path / cocoon::artifacts::kNullDir;
  CHECK(fs::exists(null_dir / cocoon::artifacts::kExpected));
  CHECK(fs::exists(null_dir / "space_rep0.tsv"));
  CHECK(fs::exists(null_dir / "space_rep1.tsv"));

  std::istringstream metrics(slurp(dir.path / cocoon::artifacts::kMetrics));
  CHECK(cocoon::read_metrics_csv(metrics).size() == 30);

  const auto test = nlohmann::json::parse(slurp(dir.path / cocoon::artifacts::kTest));
  for (const char* key : {"n", "R", "t", "df", "p", "mean_observed", "mean_expected",
                          "infeasible_count"}) {
    CHECK(test.contains(key));
  }
  CHECK(test["R"] == 2);
  CHECK(test["df"].get<int>() == test["n"].get<int>() - 1);

  const auto regression = slurp(dir.path / cocoon::artifacts::kRegression);
  CHECK(regression.find("class_proxy") != std::string::npos);

  const auto before = slurp(dir.path / cocoon::artifacts::kMetrics);
  const auto test_before = slurp(dir.path / cocoon::artifacts::kTest);
  cocoon::run_stage("metrics", c);
  cocoon::run_stage("test", c);
  CHECK(slurp(dir.path / cocoon::artifacts::kMetrics) == before);
  CHECK(slurp(dir.path / cocoon::artifacts::kTest) == test_before);

  c.item = cocoon::item_name(0, 0);
  c.k = 3;
  cocoon::run_stage("neighbors", c);
  cocoon::run_stage("project", c);
  CHECK(fs::file_size(dir.path / cocoon::artifacts::kNeighbors) > 0);
  CHECK(fs::file_size(dir.path / cocoon::artifacts::kProjection) > 0);

  c.dv = "nonexistent";
  CHECK(error_kind([&] { cocoon::run_stage("regress", c); }) == ErrorKind::kInvalidArgument);
}

}  // TEST_SUITE
