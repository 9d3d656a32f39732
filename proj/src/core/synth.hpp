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

// Synthetic consumption logs with planted cocoon structure.

#ifndef COCOON_CORE_SYNTH_HPP_
#define COCOON_CORE_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "corpus.hpp"

namespace cocoon {

struct UserGroup {
  std::string label;
  std::size_t count = 0;
  double stickiness = 0.5;          // P(event falls in the home genre)
  double class_mean = 3.0;          // mean of the class_proxy covariate
  std::vector<std::size_t> home_genres;  // empty: any genre
};

struct SynthParams {
  std::size_t n_genres = 10;
  std::size_t items_per_genre = 50;
  std::size_t min_length = 100;
  std::size_t max_length = 300;
  std::vector<UserGroup> groups;
  std::vector<std::size_t> entertainment_genres;
  // P(an event stays in the previous event's genre) before the preference
  // draw. 0 makes genres independent across events.
  double session_persistence = 0.0;
  double class_noise = 0.5;
  std::uint64_t seed = 7;

  void validate() const;
  std::size_t user_count() const;
};

// 500 users in two equal groups over 10 genres x 50 items: stickiness 0.9
// users live in the entertainment genres 0-2, stickiness 0.1 users anywhere.
SynthParams cohort_params();

struct GroundTruth {
  std::string user_id;
  double stickiness = 0.0;
  std::string home_genre;
  std::string label;
};

struct SynthCorpus {
  Corpus corpus;  // category map attached, covariates set
  std::vector<GroundTruth> truth;
};

std::string genre_name(std::size_t genre);
std::string item_name(std::size_t genre, std::size_t item);

// Users are drawn independently with per-user streams. Within a genre items
// are uniform and never repeat the previous item.
SynthCorpus generate_corpus(const SynthParams& params);

void write_ground_truth(const std::vector<GroundTruth>& truth, std::ostream& out);
// user_id,class_proxy,gender,age
void write_covariates(const Corpus& corpus, std::ostream& out);

}  // namespace cocoon

#endif  // COCOON_CORE_SYNTH_HPP_
