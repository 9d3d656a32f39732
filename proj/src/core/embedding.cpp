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

#include "embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "text.hpp"

namespace cocoon {

namespace {
constexpr double kLogitClamp = 30.0;
constexpr std::string_view kUserPrefix = "user:";
}  // namespace

void TrainingConfig::validate() const {
  if (dim < 2) fail(ErrorKind::kInvalidArgument, "dim must be >= 2 (got ", dim, ")");
  if (epochs < 1) fail(ErrorKind::kInvalidArgument, "epochs must be >= 1");
  if (negative < 1) fail(ErrorKind::kInvalidArgument, "negative must be >= 1");
  if (window < 1) fail(ErrorKind::kInvalidArgument, "window must be >= 1");
  if (min_count < 1) fail(ErrorKind::kInvalidArgument, "min_count must be >= 1");
  if (workers < 1) fail(ErrorKind::kInvalidArgument, "workers must be >= 1");
  if (!(lr_end > 0.0) || !(lr_start >= lr_end) || !std::isfinite(lr_start)) {
    fail(ErrorKind::kInvalidArgument,
         "learning rates must satisfy lr_start >= lr_end > 0 (got ", lr_start,
         ", ", lr_end, ")");
  }
}

TrainingConfig default_config() { return TrainingConfig{}; }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Noise distribution

NoiseDistribution::NoiseDistribution(std::span<const std::uint64_t> counts,
                                     double exponent) {
  if (counts.empty()) fail(ErrorKind::kInvalidArgument, "empty noise distribution");
  const std::size_t n = counts.size();
  probabilities_.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probabilities_[i] = std::pow(static_cast<double>(counts[i]), exponent);
    total += probabilities_[i];
  }
  for (auto& p : probabilities_) p /= total;

  // Vose's alias table.
  accept_.assign(n, 1.0);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    alias_[i] = static_cast<std::uint32_t>(i);
    scaled[i] = probabilities_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
}

std::size_t NoiseDistribution::sample(Rng& rng) const {
  const double x = rng.uniform() * static_cast<double>(size());
  auto i = static_cast<std::size_t>(x);
  if (i >= size()) i = size() - 1;
  return x - static_cast<double>(i) < accept_[i] ? i : alias_[i];
}

std::size_t NoiseDistribution::sample_excluding(Rng& rng,
                                                std::size_t exclude) const {
  if (size() < 2) return exclude;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const auto s = sample(rng);
    if (s != exclude) return s;
  }
  // Target holds nearly all the mass; fall back to a uniform non-target draw.
  const auto s = static_cast<std::size_t>(rng.below(size() - 1));
  return s >= exclude ? s + 1 : s;
}

// ---------------------------------------------------------------------------
// Model

EmbeddingModel init_model(const Vocabulary& vocab, std::size_t user_count,
                          const TrainingConfig& config) {
  config.validate();
  if (vocab.empty()) fail(ErrorKind::kInvalidArgument, "empty vocabulary");
  if (user_count < 1) fail(ErrorKind::kInvalidArgument, "no users to embed");
  const std::size_t dim = config.dim;
  EmbeddingModel model;
  model.item_vectors = Matrix(vocab.size(), dim);
  model.user_vectors = Matrix(user_count, dim);
  model.output_vectors = Matrix(vocab.size(), dim);
  Rng rng(config.seed);
  const double half = 0.5 / static_cast<double>(dim);
  for (auto& v : model.item_vectors.data()) v = rng.uniform(-half, half);
  for (auto& v : model.user_vectors.data()) v = rng.uniform(-half, half);
  model.noise = NoiseDistribution(vocab.counts());
  return model;
}

double sigmoid(double z) {
  z = std::clamp(z, -kLogitClamp, kLogitClamp);
  return 1.0 / (1.0 + std::exp(-z));
}

double softplus_neg(double z) {
  z = std::clamp(z, -kLogitClamp, kLogitClamp);
  return std::log1p(std::exp(-z));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

namespace {

void check_indices(std::size_t target, std::span<const std::size_t> negatives,
                   const Matrix& output, std::size_t context_dim) {
  if (context_dim != output.cols()) {
    fail(ErrorKind::kInvalidArgument, "context has dim ", context_dim,
         ", model has ", output.cols());
  }
  if (target >= output.rows()) fail(ErrorKind::kInvalidArgument, "target out of range");
  for (auto n : negatives) {
    if (n >= output.rows()) fail(ErrorKind::kInvalidArgument, "negative out of range");
    if (n == target) fail(ErrorKind::kInvalidArgument, "negative equals target");
  }
}

// Plain access for single-worker training; relaxed atomics when workers share
// the matrices without locks.
template <bool kShared, typename T>
inline T ld(const T& x) {
  if constexpr (kShared) {
    return std::atomic_ref<T>(const_cast<T&>(x)).load(std::memory_order_relaxed);
  } else {
    return x;
  }
}

template <bool kShared, typename T>
inline void st(T& x, T v) {
  if constexpr (kShared) {
    std::atomic_ref<T>(x).store(v, std::memory_order_relaxed);
  } else {
    x = v;
  }
}

// Rows handed to the unshared kernel have a length that is a multiple of
// kLanes.
inline constexpr std::size_t kLanes = 8;

inline std::size_t padded_width(std::size_t dim) {
  return (dim + kLanes - 1) / kLanes * kLanes;
}

// One output row update; returns the example's loss contribution when
// kLoss is set.
template <bool kShared, bool kLoss, typename T>
inline double update_output(const T* ctx, T* out_row, std::size_t dim, bool positive,
                            double lr, T* delta) {
  T f = 0;
  if constexpr (kShared) {
    for (std::size_t d = 0; d < dim; ++d) f += ld<true>(ctx[d]) * ld<true>(out_row[d]);
  } else {
    T acc[kLanes] = {};
    for (std::size_t b = 0; b < dim; b += kLanes) {
      for (std::size_t j = 0; j < kLanes; ++j) acc[j] += ctx[b + j] * out_row[b + j];
    }
    for (std::size_t j = 0; j < kLanes; ++j) f += acc[j];
  }
  const double z = std::clamp(static_cast<double>(f), -kLogitClamp, kLogitClamp);
  const double e = std::exp(-z);
  const double s = 1.0 / (1.0 + e);
  double loss = 0.0;
  double g;
  if (positive) {
    if constexpr (kLoss) loss = std::log1p(e);
    g = (1.0 - s) * lr;
  } else {
    if constexpr (kLoss) loss = z + std::log1p(e);  // log(1 + exp(z))
    g = -s * lr;
  }
  const T gt = static_cast<T>(g);
  if constexpr (kShared) {
    for (std::size_t d = 0; d < dim; ++d) {
      const T o = ld<true>(out_row[d]);
      delta[d] += gt * o;
      st<true>(out_row[d], static_cast<T>(o + gt * ld<true>(ctx[d])));
    }
  } else {
    for (std::size_t b = 0; b < dim; b += kLanes) {
      for (std::size_t j = 0; j < kLanes; ++j) {
        const T o = out_row[b + j];
        delta[b + j] += gt * o;
        out_row[b + j] = o + gt * ctx[b + j];
      }
    }
  }
  return loss;
}

template <bool kShared, bool kLoss, typename T>
inline double train_example(const T* ctx, std::size_t target, const std::size_t* negatives,
                            std::size_t k, T* output, std::size_t dim, double lr,
                            T* delta) {
  double loss =
      update_output<kShared, kLoss>(ctx, output + target * dim, dim, true, lr, delta);
  for (std::size_t j = 0; j < k; ++j) {
    loss += update_output<kShared, kLoss>(ctx, output + negatives[j] * dim, dim, false,
                                          lr, delta);
  }
  return loss;
}

}  // namespace

double example_loss(std::span<const double> context, std::size_t target,
                    std::span<const std::size_t> negatives, const Matrix& output) {
  check_indices(target, negatives, output, context.size());
  double loss = softplus_neg(dot(context, output.row(target)));
  for (auto n : negatives) loss += softplus_neg(-dot(context, output.row(n)));
  return loss;
}

ExampleGradient example_gradient(std::span<const double> context,
                                 std::size_t target,
                                 std::span<const std::size_t> negatives,
                                 const Matrix& output) {
  check_indices(target, negatives, output, context.size());
  const std::size_t dim = context.size();
  ExampleGradient grad;
  grad.context.assign(dim, 0.0);
  auto accumulate = [&](std::size_t index, double coeff) {
    auto o = output.row(index);
    auto& go = grad.output[index];
    go.resize(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
      grad.context[d] += coeff * o[d];
      go[d] += coeff * context[d];
    }
  };
  // d/dz [-log s(z)] = s(z) - 1 ;  d/dz [-log s(-z)] = s(z)
  accumulate(target, sigmoid(dot(context, output.row(target))) - 1.0);
  for (auto n : negatives) accumulate(n, sigmoid(dot(context, output.row(n))));
  return grad;
}

double sgd_step(std::span<const double> context, std::size_t target,
                std::span<const std::size_t> negatives, Matrix& output, double lr,
                std::span<double> context_delta) {
  check_indices(target, negatives, output, context.size());
  if (context_delta.size() != context.size()) {
    fail(ErrorKind::kInvalidArgument, "context_delta has the wrong size");
  }
  const std::size_t dim = context.size();
  const std::size_t stride = padded_width(dim);
  std::vector<double> ctx(stride, 0.0), delta(stride, 0.0);
  std::vector<double> out(output.rows() * stride, 0.0);
  std::copy(context.begin(), context.end(), ctx.begin());
  for (std::size_t r = 0; r < output.rows(); ++r) {
    std::copy_n(output.row(r).data(), dim, out.data() + r * stride);
  }
  const double loss = train_example<false, true>(ctx.data(), target, negatives.data(),
                                                 negatives.size(), out.data(), stride, lr,
                                                 delta.data());
  for (std::size_t r = 0; r < output.rows(); ++r) {
    std::copy_n(out.data() + r * stride, dim, output.row(r).data());
  }
  for (std::size_t d = 0; d < dim; ++d) context_delta[d] += delta[d];
  return loss;
}

// ---------------------------------------------------------------------------
// Space

EmbeddingSpace::EmbeddingSpace(std::vector<std::string> item_ids, Matrix items,
                               std::vector<std::string> user_ids, Matrix users,
                               bool normalized)
    : item_ids_(std::move(item_ids)),
      user_ids_(std::move(user_ids)),
      items_(std::move(items)),
      users_(std::move(users)),
      normalized_(normalized) {
  if (item_ids_.size() != items_.rows() || user_ids_.size() != users_.rows()) {
    fail(ErrorKind::kInvalidArgument, "space ids and rows are misaligned");
  }
  if (users_.rows() > 0 && items_.rows() > 0 && users_.cols() != items_.cols()) {
    fail(ErrorKind::kInvalidArgument, "user and item vectors differ in dimension");
  }
  for (std::size_t i = 0; i < item_ids_.size(); ++i) {
    if (!item_index_.emplace(item_ids_[i], i).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate item id '", item_ids_[i], "'");
    }
  }
  for (std::size_t u = 0; u < user_ids_.size(); ++u) {
    if (!user_index_.emplace(user_ids_[u], u).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate user id '", user_ids_[u], "'");
    }
  }
}

std::optional<std::size_t> EmbeddingSpace::item_index(std::string_view id) const {
  auto it = item_index_.find(std::string(id));
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> EmbeddingSpace::user_index(std::string_view id) const {
  auto it = user_index_.find(std::string(id));
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingSpace normalize_space(const EmbeddingSpace& space) {
  Matrix items = space.items();
  Matrix users = space.users();
  auto scale = [](Matrix& m, const std::vector<std::string>& ids, const char* kind) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      const double n = norm(row);
      if (!(n > 0.0) || !std::isfinite(n)) {
        fail(ErrorKind::kDegenerate, "cannot normalize zero vector for ", kind,
             " '", ids[r], "' (row ", r, ")");
      }
      for (auto& v : row) v /= n;
    }
  };
  scale(items, space.item_ids(), "item");
  scale(users, space.user_ids(), "user");
  return EmbeddingSpace(space.item_ids(), std::move(items), space.user_ids(),
                        std::move(users), true);
}

void write_space(const EmbeddingSpace& space, std::ostream& out) {
  auto check_id = [](const std::string& id) {
    if (id.empty() || id.find_first_of("\t\n\r") != std::string::npos) {
      fail(ErrorKind::kInvalidArgument, "id '", id,
           "' cannot be written (empty or contains tab/newline)");
    }
  };
  const std::size_t dim = space.dim();
  out << dim << ' ' << space.item_count() << ' ' << space.user_count() << '\n';
  auto row = [&](std::string_view prefix, const std::string& id,
                 std::span<const double> v) {
    check_id(id);
    out << prefix << id << '\t';
    for (std::size_t d = 0; d < v.size(); ++d) {
      if (d) out << ' ';
      out << text::format_double(v[d]);
    }
    out << '\n';
  };
  for (std::size_t i = 0; i < space.item_count(); ++i) {
    row("", space.item_ids()[i], space.item_vector(i));
  }
  for (std::size_t u = 0; u < space.user_count(); ++u) {
    row(kUserPrefix, space.user_ids()[u], space.user_vector(u));
  }
  if (!out) fail(ErrorKind::kIo, "failed writing embedding space");
}

EmbeddingSpace read_space(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(ErrorKind::kParse, "embedding space is empty");
  std::size_t dim = 0, n_items = 0, n_users = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> dim >> n_items >> n_users) || dim == 0) {
      throw ParseError(1, "expected header 'dim V U'");
    }
  }
  Matrix items(n_items, dim);
  Matrix users(n_users, dim);
  std::vector<std::string> item_ids;
  std::vector<std::string> user_ids;
  item_ids.reserve(n_items);
  user_ids.reserve(n_users);
  for (std::size_t r = 0; r < n_items + n_users; ++r) {
    if (!std::getline(in, line)) {
      fail(ErrorKind::kParse, "embedding space truncated after ", r, " rows");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "missing tab after id");
    std::string id = line.substr(0, tab);
    const bool is_user = r >= n_items;
    if (is_user) {
      if (!id.starts_with(kUserPrefix)) {
        throw ParseError(line_no, "user rows must start with 'user:'");
      }
      id.erase(0, kUserPrefix.size());
    }
    auto dest = is_user ? users.row(r - n_items) : items.row(r);
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    std::size_t d = 0;
    while (!rest.empty()) {
      const auto sp = rest.find(' ');
      const auto tok = rest.substr(0, sp);
      if (!tok.empty()) {
        if (d >= dim) throw ParseError(line_no, "too many values");
        const auto v = text::parse_double(tok);
        if (!v) throw ParseError(line_no, "bad value '" + std::string(tok) + "'");
        dest[d++] = *v;
      }
      if (sp == std::string_view::npos) break;
      rest.remove_prefix(sp + 1);
    }
    if (d != dim) throw ParseError(line_no, "expected " + std::to_string(dim) + " values");
    (is_user ? user_ids : item_ids).push_back(std::move(id));
  }
  return EmbeddingSpace(std::move(item_ids), std::move(items), std::move(user_ids),
                        std::move(users));
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct EncodedCorpus {
  std::vector<std::vector<std::uint32_t>> sequences;
  std::size_t positions = 0;
};

EncodedCorpus encode(const Corpus& corpus, const Vocabulary& vocab) {
  EncodedCorpus enc;
  enc.sequences.resize(corpus.users.size());
  for (std::size_t u = 0; u < corpus.users.size(); ++u) {
    auto& seq = enc.sequences[u];
    for (const auto& item : corpus.users[u].items) {
      if (auto idx = vocab.index_of(item)) seq.push_back(static_cast<std::uint32_t>(*idx));
    }
    if (seq.empty()) {
      fail(ErrorKind::kInvalidArgument, "user '", corpus.users[u].user_id,
           "' has no in-vocabulary events");
    }
    enc.positions += seq.size();
  }
  return enc;
}

struct Shard {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t positions = 0;
  Rng rng{0};
  double loss = 0.0;
  std::size_t examples = 0;
  double lr = 0.0;
};

std::vector<Shard> make_shards(const EncodedCorpus& enc, std::size_t workers,
                               std::uint64_t seed) {
  workers = std::min(workers, enc.sequences.size());
  std::vector<Shard> shards(workers);
  const double per = static_cast<double>(enc.positions) / static_cast<double>(workers);
  std::size_t u = 0;
  std::size_t acc = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    Shard& s = shards[w];
    s.begin = u;
    const std::size_t limit = enc.sequences.size() - (workers - w - 1);
    const double target = per * static_cast<double>(w + 1);
    do {
      acc += enc.sequences[u].size();
      s.positions += enc.sequences[u].size();
      ++u;
    } while (u < limit && (w + 1 == workers || static_cast<double>(acc) < target));
    s.end = u;
    s.rng = Rng(derive_seed(seed, 1000 + w));
  }
  return shards;
}

// Single-precision working copy of the model used by the training loop, with
// rows zero-padded to a multiple of kLanes.
struct WorkingModel {
  std::size_t dim = 0;
  std::size_t stride = 0;
  std::vector<float> users;
  std::vector<float> items;
  std::vector<float> output;

  explicit WorkingModel(const EmbeddingModel& m)
      : dim(m.item_vectors.cols()),
        stride(padded_width(dim)),
        users(pack(m.user_vectors)),
        items(pack(m.item_vectors)),
        output(pack(m.output_vectors)) {}

  std::vector<float> pack(const Matrix& m) const {
    std::vector<float> out(m.rows() * stride, 0.0f);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(r * stride));
    }
    return out;
  }

  void unpack(const std::vector<float>& v, Matrix& m) const {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      std::copy_n(v.data() + r * stride, dim, m.row(r).data());
    }
  }

  bool all_finite() const {
    auto finite = [](const std::vector<float>& v) {
      return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
    };
    return finite(users) && finite(items) && finite(output);
  }
};

template <bool kShared, bool kLoss>
inline void shard_epoch(WorkingModel& model, const NoiseDistribution& noise,
                        const EncodedCorpus& enc, const TrainingConfig& cfg,
                        std::size_t epoch, Shard& shard) {
  const std::size_t dim = model.stride;
  const std::size_t k = cfg.negative;
  const std::size_t window = cfg.window;
  const double total = static_cast<double>(cfg.epochs * shard.positions);
  const double span = total > 1.0 ? total - 1.0 : 1.0;
  std::size_t done = epoch * shard.positions;
  std::vector<std::size_t> negatives(k);
  std::vector<float> delta(dim);
  float* output = model.output.data();
  float* items = model.items.data();
  float* users = model.users.data();
  const std::size_t k_eff = noise.size() > 1 ? k : 0;

  auto run = [&](float* ctx, std::size_t target, double lr) {
    for (std::size_t j = 0; j < k_eff; ++j) {
      negatives[j] = noise.sample_excluding(shard.rng, target);
    }
    std::fill(delta.begin(), delta.end(), 0.0f);
    shard.loss += train_example<kShared, kLoss>(ctx, target, negatives.data(), k_eff,
                                                output, dim, lr, delta.data());
    ++shard.examples;
    if constexpr (kShared) {
      for (std::size_t d = 0; d < dim; ++d) st<true>(ctx[d], ld<true>(ctx[d]) + delta[d]);
    } else {
#pragma omp simd
      for (std::size_t d = 0; d < dim; ++d) ctx[d] += delta[d];
    }
  };

  for (std::size_t u = shard.begin; u < shard.end; ++u) {
    const auto& seq = enc.sequences[u];
    float* user = users + u * dim;
    const std::size_t n = seq.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double lr =
          cfg.lr_start - (cfg.lr_start - cfg.lr_end) * static_cast<double>(done) / span;
      ++done;
      shard.lr = lr;
      const std::size_t target = seq[i];
      run(user, target, lr);
      const std::size_t w =
          cfg.shrink_window ? 1 + static_cast<std::size_t>(shard.rng.below(window)) : window;
      const std::size_t lo = i >= w ? i - w : 0;
      const std::size_t hi = std::min(n - 1, i + w);
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        run(items + static_cast<std::size_t>(seq[j]) * dim, target, lr);
      }
    }
  }
}

#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__)
#define COCOON_ISA_CLONES __attribute__((flatten, target_clones("avx2", "default")))
#else
#define COCOON_ISA_CLONES
#endif

COCOON_ISA_CLONES
void train_shard_epoch(WorkingModel& model, const NoiseDistribution& noise,
                       const EncodedCorpus& enc, const TrainingConfig& cfg,
                       std::size_t epoch, Shard& shard, bool shared, bool track_loss) {
  if (shared) {
    if (track_loss) {
      shard_epoch<true, true>(model, noise, enc, cfg, epoch, shard);
    } else {
      shard_epoch<true, false>(model, noise, enc, cfg, epoch, shard);
    }
  } else {
    if (track_loss) {
      shard_epoch<false, true>(model, noise, enc, cfg, epoch, shard);
    } else {
      shard_epoch<false, false>(model, noise, enc, cfg, epoch, shard);
    }
  }
}

}  // namespace

EmbeddingSpace train(const Corpus& corpus, const TrainingConfig& config,
                     TrainingReport* report) {
  config.validate();
  const Vocabulary vocab = build_vocabulary(corpus, config.min_count);
  const EncodedCorpus enc = encode(corpus, vocab);
  EmbeddingModel model = init_model(vocab, corpus.users.size(), config);
  std::vector<Shard> shards = make_shards(enc, config.workers, config.seed);
  WorkingModel work(model);

  if (report) {
    report->epoch_loss.clear();
    report->examples_per_epoch = 0;
  }
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto& s : shards) {
      s.loss = 0.0;
      s.examples = 0;
    }
    const bool track_loss = report != nullptr;
    if (shards.size() == 1) {
      train_shard_epoch(work, model.noise, enc, config, epoch, shards[0], false, track_loss);
    } else {
      std::vector<std::jthread> threads;
      threads.reserve(shards.size());
      for (auto& s : shards) {
        threads.emplace_back([&work, &model, &enc, &config, epoch, &s, track_loss] {
          train_shard_epoch(work, model.noise, enc, config, epoch, s, true, track_loss);
        });
      }
    }
    double loss = 0.0;
    std::size_t examples = 0;
    double lr = 0.0;
    for (const auto& s : shards) {
      loss += s.loss;
      examples += s.examples;
      lr = std::max(lr, s.lr);
    }
    if (!work.all_finite() || !std::isfinite(loss)) {
      fail(ErrorKind::kNumeric, "non-finite parameter after epoch ", epoch + 1,
           " (learning rate ", lr, ")");
    }
    if (report) {
      report->epoch_loss.push_back(examples ? loss / static_cast<double>(examples) : 0.0);
      report->examples_per_epoch = examples;
    }
  }

  std::vector<std::string> user_ids;
  user_ids.reserve(corpus.users.size());
  for (const auto& u : corpus.users) user_ids.push_back(u.user_id);
  work.unpack(work.items, model.item_vectors);
  work.unpack(work.users, model.user_vectors);
  return EmbeddingSpace(vocab.items(), std::move(model.item_vectors),
                        std::move(user_ids), std::move(model.user_vectors));
}

}  // namespace cocoon
