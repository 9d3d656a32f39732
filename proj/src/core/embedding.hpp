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

// Paragraph-vector training (PV-DBOW) with negative sampling.
//
// Every user is a document and every consumed item is a word. For each event
// position the user vector is trained to predict the item, and each item in
// the surrounding window is trained to predict it as well (skip-gram), so
// user vectors and item vectors end up in one geometry.

#ifndef COCOON_CORE_EMBEDDING_HPP_
#define COCOON_CORE_EMBEDDING_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "rng.hpp"

namespace cocoon {

struct TrainingConfig {
  std::size_t dim = 300;
  std::uint64_t min_count = 1;
  std::size_t epochs = 70;
  std::size_t negative = 5;
  std::size_t window = 5;
  // Draw the effective window per position uniformly from 1..window instead
  // of always using the full window.
  bool shrink_window = true;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  // Throws kInvalidArgument on dim < 2, epochs < 1, negative < 1, window < 1,
  // min_count < 1, workers < 1, or a non-positive / increasing rate schedule.
  void validate() const;
};

TrainingConfig default_config();

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Unigram^0.75 sampler over vocabulary indices (alias method).
class NoiseDistribution {
 public:
  NoiseDistribution() = default;
  explicit NoiseDistribution(std::span<const std::uint64_t> counts,
                             double exponent = 0.75);

  std::size_t size() const { return probabilities_.size(); }
  const std::vector<double>& probabilities() const { return probabilities_; }
  std::size_t sample(Rng& rng) const;
  // Draws until the result differs from `exclude` (bounded retries; returns
  // `exclude` only if the distribution has a single support point).
  std::size_t sample_excluding(Rng& rng, std::size_t exclude) const;

 private:
  std::vector<double> probabilities_;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
};

struct EmbeddingModel {
  Matrix user_vectors;    // |users| x dim, input side
  Matrix item_vectors;    // V x dim, input side
  Matrix output_vectors;  // V x dim
  NoiseDistribution noise;
};

// Inputs uniform in [-0.5/dim, 0.5/dim] (items first, then users), outputs 0.
EmbeddingModel init_model(const Vocabulary& vocab, std::size_t user_count,
                          const TrainingConfig& config);

// Numerically safe logistic: logits are clamped to [-30, 30].
double sigmoid(double z);
// log(1 + exp(-z)) = -log sigmoid(z), clamped the same way.
double softplus_neg(double z);

// Negative-sampling loss of one example:
//   -[log s(c . o_t) + sum_j log s(-c . o_nj)]
double example_loss(std::span<const double> context, std::size_t target,
                    std::span<const std::size_t> negatives, const Matrix& output);

struct ExampleGradient {
  std::vector<double> context;
  // Gradients w.r.t. output rows, keyed by vocabulary index. Repeated
  // negatives accumulate into one entry.
  std::unordered_map<std::size_t, std::vector<double>> output;
};

ExampleGradient example_gradient(std::span<const double> context,
                                 std::size_t target,
                                 std::span<const std::size_t> negatives,
                                 const Matrix& output);

// One SGD step: updates output rows in place and adds -lr * dL/dc into
// `context_delta` (applied by the caller). Returns the example loss evaluated
// before the update.
double sgd_step(std::span<const double> context, std::size_t target,
                std::span<const std::size_t> negatives, Matrix& output, double lr,
                std::span<double> context_delta);

class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  EmbeddingSpace(std::vector<std::string> item_ids, Matrix items,
                 std::vector<std::string> user_ids, Matrix users,
                 bool normalized = false);

  std::size_t dim() const { return items_.cols(); }
  std::size_t item_count() const { return item_ids_.size(); }
  std::size_t user_count() const { return user_ids_.size(); }
  bool normalized() const { return normalized_; }

  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const Matrix& items() const { return items_; }
  const Matrix& users() const { return users_; }

  std::optional<std::size_t> item_index(std::string_view id) const;
  std::optional<std::size_t> user_index(std::string_view id) const;
  std::span<const double> item_vector(std::size_t i) const { return items_.row(i); }
  std::span<const double> user_vector(std::size_t u) const { return users_.row(u); }

  friend bool operator==(const EmbeddingSpace& a, const EmbeddingSpace& b) {
    return a.item_ids_ == b.item_ids_ && a.user_ids_ == b.user_ids_ &&
           a.items_ == b.items_ && a.users_ == b.users_ &&
           a.normalized_ == b.normalized_;
  }

 private:
  std::vector<std::string> item_ids_;
  std::vector<std::string> user_ids_;
  Matrix items_;
  Matrix users_;
  bool normalized_ = false;
  std::unordered_map<std::string, std::size_t> item_index_;
  std::unordered_map<std::string, std::size_t> user_index_;
};

struct TrainingReport {
  std::vector<double> epoch_loss;  // mean example loss per epoch
  std::size_t examples_per_epoch = 0;
};

// Users appear in corpus order; every user needs at least one in-vocabulary
// event. Throws kNumeric (with epoch and learning rate) if a parameter
// becomes non-finite.
EmbeddingSpace train(const Corpus& corpus, const TrainingConfig& config,
                     TrainingReport* report = nullptr);

// Scales every vector to unit length. Throws kDegenerate naming the first
// zero row.
EmbeddingSpace normalize_space(const EmbeddingSpace& space);

// `dim V U` header, then V item rows and U `user:`-prefixed rows, each
// `id<TAB>v1 v2 ...` with round-trip exact values.
void write_space(const EmbeddingSpace& space, std::ostream& out);
EmbeddingSpace read_space(std::istream& in);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace cocoon

#endif  // COCOON_CORE_EMBEDDING_HPP_
