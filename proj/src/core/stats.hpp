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

#ifndef COCOON_CORE_STATS_HPP_
#define COCOON_CORE_STATS_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedding.hpp"

namespace cocoon {

struct Descriptives {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // n - 1 denominator; absent for n == 1
};

Descriptives describe(std::span<const double> values);

// I_x(a, b). `y` must equal 1 - x; passing it separately keeps precision
// when x is close to 1.
double regularized_incomplete_beta(double a, double b, double x, double y);
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double t_tail_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean_diff = 0.0;
  std::size_t n = 0;
};

// Paired test on d = a - b. Throws kDegenerate when sd(d) == 0.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
};

struct RegressionResult {
  std::vector<Coefficient> coefficients;  // intercept first
  double r_squared = 0.0;
  std::size_t n = 0;
  std::size_t df = 0;
  double sigma = 0.0;                     // residual standard error
  std::vector<double> residuals;
};

// Least squares with an intercept prepended to `x` (N x p). Solved by
// Householder QR; standard errors come from the triangular factor.
// `names` labels the p predictors. Throws kDegenerate naming the first
// column that is linearly dependent on earlier ones.
RegressionResult ols_fit(const Matrix& x, std::span<const double> y,
                         const std::vector<std::string>& names = {});

// "*" p < 0.05, "**" p < 0.01, "***" p < 0.001.
std::string significance_stars(double p);

// variable,B,SE,t,p,stars,N,R2
void write_regression_csv(const RegressionResult& result, std::ostream& out);

}  // namespace cocoon

#endif  // COCOON_CORE_STATS_HPP_
