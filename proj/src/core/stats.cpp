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

#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "error.hpp"
#include "text.hpp"

namespace cocoon {

Descriptives describe(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::kInvalidArgument, "describe() needs at least one value");
  Descriptives d;
  d.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  d.mean = sum / static_cast<double>(d.n);
  if (d.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - d.mean) * (v - d.mean);
    d.sd = std::sqrt(ss / static_cast<double>(d.n - 1));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Incomplete beta (continued fraction, modified Lentz)

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 200000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  fail(ErrorKind::kNumeric, "incomplete beta did not converge (a=", a, ", b=", b,
       ", x=", x, ")");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) {
    fail(ErrorKind::kInvalidArgument, "incomplete beta needs a, b > 0");
  }
  if (x < 0.0 || x > 1.0 || std::isnan(x)) {
    fail(ErrorKind::kInvalidArgument, "incomplete beta needs 0 <= x <= 1");
  }
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(y);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, y) / b;
}

double regularized_incomplete_beta(double a, double b, double x) {
  return regularized_incomplete_beta(a, b, x, 1.0 - x);
}

double t_tail_p(double t, double df) {
  if (!(df >= 1.0)) fail(ErrorKind::kInvalidArgument, "t_tail_p needs df >= 1 (got ", df, ")");
  if (std::isnan(t)) fail(ErrorKind::kInvalidArgument, "t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  return std::clamp(regularized_incomplete_beta(0.5 * df, 0.5, x, y), 0.0, 1.0);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kInvalidArgument, "paired test needs equal lengths (", a.size(),
         " vs ", b.size(), ")");
  }
  if (a.size() < 2) fail(ErrorKind::kInvalidArgument, "paired test needs n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const auto desc = describe(d);
  if (!(*desc.sd > 0.0)) {
    fail(ErrorKind::kDegenerate, "paired differences have zero variance");
  }
  TTestResult r;
  r.n = d.size();
  r.df = static_cast<double>(r.n - 1);
  r.mean_diff = desc.mean;
  r.t = desc.mean / (*desc.sd / std::sqrt(static_cast<double>(r.n)));
  r.p = t_tail_p(r.t, r.df);
  return r;
}

// ---------------------------------------------------------------------------
// OLS

RegressionResult ols_fit(const Matrix& x, std::span<const double> y,
                         const std::vector<std::string>& names) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const std::size_t m = p + 1;
  if (y.size() != n) fail(ErrorKind::kInvalidArgument, "design has ", n, " rows but y has ", y.size());
  if (!names.empty() && names.size() != p) {
    fail(ErrorKind::kInvalidArgument, "expected ", p, " predictor names");
  }
  if (n <= m) {
    fail(ErrorKind::kInvalidArgument, "OLS needs more observations (", n,
         ") than parameters (", m, ")");
  }
  auto column_name = [&](std::size_t j) -> std::string {
    if (j == 0) return "(intercept)";
    return names.empty() ? "x" + std::to_string(j) : names[j - 1];
  };

  // Column-major working copy of [1 X].
  std::vector<double> a(n * m);
  auto A = [&](std::size_t r, std::size_t c) -> double& { return a[c * n + r]; };
  for (std::size_t r = 0; r < n; ++r) {
    A(r, 0) = 1.0;
    for (std::size_t c = 0; c < p; ++c) A(r, c + 1) = x(r, c);
  }
  for (double v : a) {
    if (!std::isfinite(v)) fail(ErrorKind::kInvalidArgument, "design matrix has non-finite values");
  }
  std::vector<double> col_norm(m);
  for (std::size_t c = 0; c < m; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += A(r, c) * A(r, c);
    col_norm[c] = std::sqrt(s);
  }
  std::vector<double> qty(y.begin(), y.end());

  // Householder reflections; R overwrites the upper triangle.
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0.0;
    for (std::size_t r = k; r < n; ++r) s += A(r, k) * A(r, k);
    const double alpha_norm = std::sqrt(s);
    if (!(alpha_norm > 1e-10 * std::max(col_norm[k], 1e-300)) || col_norm[k] == 0.0) {
      fail(ErrorKind::kDegenerate, "design matrix is rank deficient: column '",
           column_name(k), "' is collinear with earlier columns");
    }
    const double alpha = A(k, k) > 0 ? -alpha_norm : alpha_norm;
    std::vector<double> v(n - k);
    for (std::size_t r = k; r < n; ++r) v[r - k] = A(r, k);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double e : v) vnorm2 += e * e;
    if (vnorm2 > 0.0) {
      for (std::size_t c = k; c < m; ++c) {
        double proj = 0.0;
        for (std::size_t r = k; r < n; ++r) proj += v[r - k] * A(r, c);
        const double f = 2.0 * proj / vnorm2;
        for (std::size_t r = k; r < n; ++r) A(r, c) -= f * v[r - k];
      }
      double proj = 0.0;
      for (std::size_t r = k; r < n; ++r) proj += v[r - k] * qty[r];
      const double f = 2.0 * proj / vnorm2;
      for (std::size_t r = k; r < n; ++r) qty[r] -= f * v[r - k];
    }
  }

  // Back substitution for B and for R^-1.
  std::vector<double> beta(m);
  for (std::size_t i = m; i-- > 0;) {
    double s = qty[i];
    for (std::size_t j = i + 1; j < m; ++j) s -= A(i, j) * beta[j];
    beta[i] = s / A(i, i);
  }
  std::vector<double> rinv(m * m, 0.0);  // row-major upper triangular
  for (std::size_t j = 0; j < m; ++j) {
    rinv[j * m + j] = 1.0 / A(j, j);
    for (std::size_t i = j; i-- > 0;) {
      double s = 0.0;
      for (std::size_t k = i + 1; k <= j; ++k) s += A(i, k) * rinv[k * m + j];
      rinv[i * m + j] = -s / A(i, i);
    }
  }

  RegressionResult res;
  res.n = n;
  res.df = n - m;
  res.residuals.resize(n);
  double sse = 0.0;
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(n);
  double sst = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double fit = beta[0];
    for (std::size_t c = 0; c < p; ++c) fit += beta[c + 1] * x(r, c);
    res.residuals[r] = y[r] - fit;
    sse += res.residuals[r] * res.residuals[r];
    sst += (y[r] - ybar) * (y[r] - ybar);
  }
  const double sigma2 = sse / static_cast<double>(res.df);
  res.sigma = std::sqrt(sigma2);
  res.r_squared = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 0.0;

  for (std::size_t j = 0; j < m; ++j) {
    double diag = 0.0;
    for (std::size_t k = j; k < m; ++k) diag += rinv[j * m + k] * rinv[j * m + k];
    Coefficient c;
    c.name = column_name(j);
    c.estimate = beta[j];
    c.se = std::sqrt(sigma2 * diag);
    if (c.se > 0.0) {
      c.t = c.estimate / c.se;
      c.p = t_tail_p(c.t, static_cast<double>(res.df));
    } else if (c.estimate != 0.0) {
      c.t = std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
      c.p = 0.0;
    } else {
      c.t = 0.0;
      c.p = 1.0;
    }
    res.coefficients.push_back(std::move(c));
  }
  return res;
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

void write_regression_csv(const RegressionResult& result, std::ostream& out) {
  out << "variable,B,SE,t,p,stars,N,R2\n";
  for (const auto& c : result.coefficients) {
    out << c.name << ',' << text::format_double(c.estimate) << ','
        << text::format_double(c.se) << ',' << text::format_double(c.t) << ','
        << text::format_double(c.p) << ',' << significance_stars(c.p) << ','
        << result.n << ',' << text::format_double(result.r_squared) << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "failed writing regression table");
}

}  // namespace cocoon
