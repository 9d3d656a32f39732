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

#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "embedding.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "test_util.hpp"

using cocoon::ErrorKind;
using cocoon::Matrix;
using testing::error_kind;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, cocoon::Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

}  // namespace

TEST_SUITE("embedding") {

TEST_CASE("default configuration") {
  const auto c = cocoon::default_config();
  CHECK(c.dim == 300);
  CHECK(c.epochs == 70);
  CHECK(c.min_count == 1);
  CHECK(c.negative == 5);
  CHECK(c.window == 5);
  CHECK(c.lr_start == doctest::Approx(0.025));
  CHECK(c.lr_end == doctest::Approx(0.0001));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("configuration invariants") {
  auto bad = [](auto mutate) {
    auto c = cocoon::default_config();
    mutate(c);
    return error_kind([&] { c.validate(); });
  };
  CHECK(bad([](auto& c) { c.epochs = 0; }) == ErrorKind::kInvalidArgument);
  CHECK(bad([](auto& c) { c.dim = 0; }) == ErrorKind::kInvalidArgument);
  CHECK(bad([](auto& c) { c.negative = 0; }) == ErrorKind::kInvalidArgument);
  CHECK(bad([](auto& c) { c.window = 0; }) == ErrorKind::kInvalidArgument);
  CHECK(bad([](auto& c) { c.workers = 0; }) == ErrorKind::kInvalidArgument);
  CHECK(bad([](auto& c) { c.lr_end = 0.5; }) == ErrorKind::kInvalidArgument);
  CHECK(bad([](auto& c) { c.lr_end = 0.0; }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("model initialisation") {
  auto corpus = testing::parse_csv("user_id,timestamp,item_id\nu1,1,a\nu1,2,b\nu2,1,a\n");
  auto vocab = cocoon::build_vocabulary(corpus, 1);
  auto cfg = cocoon::default_config();
  cfg.dim = 4;
  auto m = cocoon::init_model(vocab, corpus.users.size(), cfg);
  CHECK(m.item_vectors.rows() == 2);
  CHECK(m.item_vectors.cols() == 4);
  CHECK(m.user_vectors.rows() == 2);
  CHECK(m.user_vectors.cols() == 4);
  for (double v : m.item_vectors.data()) CHECK(std::abs(v) <= 0.5 / 4);
  for (double v : m.output_vectors.data()) CHECK(v == 0.0);

  auto again = cocoon::init_model(vocab, corpus.users.size(), cfg);
  CHECK(again.item_vectors == m.item_vectors);
  CHECK(again.user_vectors == m.user_vectors);
}

TEST_CASE("noise distribution") {
  SUBCASE("uniform counts give a uniform distribution") {
    std::vector<std::uint64_t> counts(7, 13);
    cocoon::NoiseDistribution noise(counts);
    for (double p : noise.probabilities()) CHECK(p == doctest::Approx(1.0 / 7));
  }
  SUBCASE("draw frequencies follow count^0.75") {
    std::vector<std::uint64_t> counts = {1, 10, 100, 3};
    cocoon::NoiseDistribution noise(counts);
    double z = 0;
    for (auto c : counts) z += std::pow(static_cast<double>(c), 0.75);
    cocoon::Rng rng(3);
    std::vector<double> freq(4, 0.0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) freq[noise.sample(rng)] += 1.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double p = std::pow(static_cast<double>(counts[i]), 0.75) / z;
      CHECK(noise.probabilities()[i] == doctest::Approx(p).epsilon(1e-12));
      const double se = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(freq[i] / n - p) < 5 * se);
    }
  }
  SUBCASE("excluded index is never drawn") {
    std::vector<std::uint64_t> counts = {1000000, 1};
    cocoon::NoiseDistribution noise(counts);
    cocoon::Rng rng(5);
    for (int i = 0; i < 2000; ++i) CHECK(noise.sample_excluding(rng, 0) == 1);
  }
}

TEST_CASE("loss at zero vectors is (k + 1) log 2") {
  Matrix out(6, 3);
  std::vector<double> ctx(3, 0.0);
  std::vector<std::size_t> two = {1, 2};
  std::vector<std::size_t> five = {1, 2, 3, 4, 5};
  CHECK(cocoon::example_loss(ctx, 0, two, out) == doctest::Approx(3 * std::numbers::ln2));
  CHECK(cocoon::example_loss(ctx, 0, five, out) == doctest::Approx(6 * std::numbers::ln2));
}

TEST_CASE("loss matches the direct formula") {
  cocoon::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix out = random_matrix(8, 10, rng, 1.0);
    std::vector<double> ctx(10);
    for (auto& v : ctx) v = rng.uniform(-1, 1);
    std::vector<std::size_t> neg = {1, 3, 3, 7};
    const double want = oracle::negative_sampling_loss(ctx, to_rows(out), 0, neg);
    CHECK(std::abs(cocoon::example_loss(ctx, 0, neg, out) - want) < 1e-12);
  }
}

TEST_CASE("negatives equal to the target are rejected") {
  Matrix out(3, 2);
  std::vector<double> ctx(2, 0.0);
  std::vector<std::size_t> neg = {1, 0};
  CHECK(error_kind([&] { cocoon::example_loss(ctx, 0, neg, out); }) ==
        ErrorKind::kInvalidArgument);
}

TEST_CASE("analytic gradient agrees with central differences") {
  cocoon::Rng rng(2024);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix out = random_matrix(6, 10, rng, 0.8);
    std::vector<double> ctx(10);
    for (auto& v : ctx) v = rng.uniform(-0.8, 0.8);
    const std::vector<std::size_t> neg = {1, 2, 4, 5, 2};
    const auto g = cocoon::example_gradient(ctx, 0, neg, out);
    for (std::size_t d = 0; d < ctx.size(); ++d) {
      auto up = ctx, down = ctx;
      up[d] += h;
      down[d] -= h;
      const double fd =
          (cocoon::example_loss(up, 0, neg, out) - cocoon::example_loss(down, 0, neg, out)) /
          (2 * h);
      CHECK(g.context[d] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
    }
    for (const auto& [row, grad] : g.output) {
      for (std::size_t d = 0; d < grad.size(); ++d) {
        Matrix up = out, down = out;
        up(row, d) += h;
        down(row, d) -= h;
        const double fd =
            (cocoon::example_loss(ctx, 0, neg, up) - cocoon::example_loss(ctx, 0, neg, down)) /
            (2 * h);
        CHECK(grad[d] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
      }
    }
  }
}

TEST_CASE("sgd step moves along the negative gradient") {
  cocoon::Rng rng(8);
  Matrix out = random_matrix(5, 7, rng, 0.5);
  std::vector<double> ctx(7);
  for (auto& v : ctx) v = rng.uniform(-0.5, 0.5);
  const std::vector<std::size_t> neg = {2, 4};
  const double lr = 0.01;
  const auto g = cocoon::example_gradient(ctx, 1, neg, out);
  const double before = cocoon::example_loss(ctx, 1, neg, out);

  Matrix stepped = out;
  std::vector<double> delta(7, 0.0);
  const double reported = cocoon::sgd_step(ctx, 1, neg, stepped, lr, delta);
  CHECK(reported == doctest::Approx(before).epsilon(1e-12));
  for (std::size_t d = 0; d < 7; ++d) {
    CHECK(delta[d] == doctest::Approx(-lr * g.context[d]).epsilon(1e-10));
  }
  // The output rows are updated one after another, so later rows see the
  // same context; each row moves by -lr * its own gradient.
  for (const auto& [row, grad] : g.output) {
    for (std::size_t d = 0; d < 7; ++d) {
      CHECK(stepped(row, d) - out(row, d) == doctest::Approx(-lr * grad[d]).epsilon(1e-10));
    }
  }
  std::vector<double> moved = ctx;
  for (std::size_t d = 0; d < 7; ++d) moved[d] += delta[d];
  CHECK(cocoon::example_loss(moved, 1, neg, stepped) < before);
}

TEST_CASE("normalisation") {
  Matrix items(2, 2);
  items(0, 0) = 3;
  items(0, 1) = 4;
  items(1, 0) = 0.6;
  items(1, 1) = 0.8;
  Matrix users(1, 2);
  users(0, 0) = -2;
  users(0, 1) = 0;
  cocoon::EmbeddingSpace s({"a", "b"}, items, {"u"}, users);
  auto n = cocoon::normalize_space(s);
  CHECK(n.normalized());
  CHECK(n.item_vector(0)[0] == doctest::Approx(0.6));
  CHECK(n.item_vector(0)[1] == doctest::Approx(0.8));
  CHECK(std::abs(n.item_vector(1)[0] - 0.6) < 1e-12);
  CHECK(std::abs(n.item_vector(1)[1] - 0.8) < 1e-12);
  CHECK(n.user_vector(0)[0] == -1.0);

  Matrix zero(1, 2);
  cocoon::EmbeddingSpace z({"a", "b"}, items, {"ghost"}, zero);
  const auto msg = testing::error_message([&] { cocoon::normalize_space(z); });
  CHECK(msg.find("ghost") != std::string::npos);
  CHECK(error_kind([&] { cocoon::normalize_space(z); }) == ErrorKind::kDegenerate);
}

TEST_CASE("cosine is scale invariant") {
  cocoon::Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(6), b(6);
    for (auto& v : a) v = rng.uniform(-3, 3);
    for (auto& v : b) v = rng.uniform(-3, 3);
    const double before = cocoon::cosine(a, b);
    auto na = a, nb = b;
    const double la = cocoon::norm(a), lb = cocoon::norm(b);
    for (auto& v : na) v /= la;
    for (auto& v : nb) v /= lb;
    CHECK(std::abs(cocoon::cosine(na, nb) - before) < 1e-10);
  }
}

TEST_CASE("space file round trip is exact") {
  cocoon::Rng rng(4);
  Matrix items = random_matrix(3, 5, rng, 1.0);
  Matrix users = random_matrix(2, 5, rng, 1e-7);
  items(0, 0) = 0.1 + 0.2;
  cocoon::EmbeddingSpace s({"a", "b b", "c"}, items, {"u1", "u2"}, users);
  std::stringstream buf;
  cocoon::write_space(s, buf);
  CHECK(buf.str().rfind("5 3 2\n", 0) == 0);
  CHECK(buf.str().find("user:u1\t") != std::string::npos);
  auto back = cocoon::read_space(buf);
  CHECK(back == s);
}

TEST_CASE("malformed space files") {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return error_kind([&] { cocoon::read_space(in); });
  };
  CHECK(read("") == ErrorKind::kParse);
  CHECK(read("2 1 0\na\t1\n") == ErrorKind::kParse);
  CHECK(read("2 1 1\na\t1 2\nu\t1 2\n") == ErrorKind::kParse);
  CHECK(read("2 2 0\na\t1 2\n") == ErrorKind::kParse);
  CHECK(read("2 1 0\na\t1 x\n") == ErrorKind::kParse);
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto corpus = fixtures::block_corpus(2, 6, 8, 30, 1);
  auto cfg = cocoon::default_config();
  cfg.dim = 8;
  cfg.epochs = 3;
  const auto a = cocoon::train(corpus, cfg);
  const auto b = cocoon::train(corpus, cfg);
  CHECK(a == b);
  CHECK(a.dim() == 8);
  CHECK(a.user_count() == corpus.users.size());
  CHECK(a.items().all_finite());
  cfg.seed = 2;
  CHECK_FALSE(cocoon::train(corpus, cfg) == a);
}

TEST_CASE("training loss decreases") {
  auto corpus = fixtures::block_corpus(2, 10, 10, 40, 7);
  auto cfg = cocoon::default_config();
  cfg.dim = 16;
  cfg.epochs = 15;
  cocoon::TrainingReport report;
  cocoon::train(corpus, cfg, &report);
  REQUIRE(report.epoch_loss.size() == 15);
  CHECK(report.examples_per_epoch > 0);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
}

TEST_CASE("users need an in-vocabulary event") {
  auto corpus = testing::parse_csv("user_id,timestamp,item_id\nu1,1,a\nu1,2,a\nu2,1,b\n");
  auto cfg = cocoon::default_config();
  cfg.dim = 4;
  cfg.epochs = 1;
  cfg.min_count = 2;
  const auto msg = testing::error_message([&] { cocoon::train(corpus, cfg); });
  CHECK(msg.find("u2") != std::string::npos);
}

TEST_CASE("runaway learning rate is reported") {
  auto corpus = fixtures::block_corpus(1, 3, 4, 20, 1);
  auto cfg = cocoon::default_config();
  cfg.dim = 4;
  cfg.epochs = 5;
  cfg.lr_start = 1e300;
  cfg.lr_end = 1e299;
  CHECK(error_kind([&] { cocoon::train(corpus, cfg); }) == ErrorKind::kNumeric);
}

TEST_CASE("block structure separates item vectors") {
  auto corpus = fixtures::block_corpus(2, 10, 12, 60, 3);
  auto cfg = cocoon::default_config();
  cfg.dim = 16;
  cfg.epochs = 20;
  for (std::size_t workers : {1u, 3u}) {
    CAPTURE(workers);
    cfg.workers = workers;
    const auto space = cocoon::train(corpus, cfg);
    CHECK(space.items().all_finite());
    CHECK(fixtures::block_similarity(space).gap() >= 0.1);
  }
}

TEST_CASE("fixed window option") {
  auto corpus = fixtures::block_corpus(1, 2, 5, 12, 2);
  auto cfg = cocoon::default_config();
  cfg.dim = 4;
  cfg.epochs = 1;
  cfg.window = 2;
  cfg.shrink_window = false;
  cocoon::TrainingReport report;
  cocoon::train(corpus, cfg, &report);
  // Each position contributes one user example plus one per neighbour within
  // distance 2: for a length-12 sequence that is 12 + 2 * (2*1 + 2*2 + 8*... )
  std::size_t neighbours = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min<std::size_t>(11, i + 2);
    neighbours += hi - lo;
  }
  CHECK(report.examples_per_epoch == 2 * (12 + neighbours));
}

}  // TEST_SUITE
