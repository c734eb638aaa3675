// Copyright 2026 The uniftest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

#include "uniftest/error.hpp"
#include "uniftest/kernels.hpp"
#include "uniftest/model.hpp"
#include "uniftest/normal.hpp"
#include "uniftest/numeric.hpp"
#include "uniftest/statistics.hpp"

namespace uniftest {

enum class RiskFormula { kExact, kStar, kPrior, kLr };

inline std::string_view to_string(RiskFormula formula) {
  switch (formula) {
    case RiskFormula::kExact:
      return "exact";
    case RiskFormula::kStar:
      return "star";
    case RiskFormula::kPrior:
      return "prior";
    case RiskFormula::kLr:
      return "lr";
  }
  return "exact";
}

// 2 Phi(-u/2): the limiting risk of the optimal linear test at separation u.
inline double asymptotic_risk(double u) {
  if (!(u >= 0.0)) throw DomainError("asymptotic_risk: u must be >= 0");
  return 2.0 * normal_cdf(-0.5 * u);
}

// A separation parameter together with its asymptotic risk. tail_bound bounds
// the truncation error of u^2 where the formula is a series.
struct AsymptoticRisk {
  double u = 0.0;
  double risk = 1.0;
  RiskFormula formula = RiskFormula::kExact;
  double tail_bound = 0.0;

  static AsymptoticRisk from_u(double u, RiskFormula formula, double tail_bound = 0.0) {
    return AsymptoticRisk{u, asymptotic_risk(u), formula, tail_bound};
  }
};

namespace detail {

// N * sum_m P_lambda(m) g^2_{m,lambda}(x), summed by decreasing magnitude.
inline double separation_squared(const ProblemParams& params, double x) {
  const double lambda = params.lambda();
  const auto pmf = poisson_pmf_table(lambda, params.M_max());
  std::vector<double> terms(pmf.size());
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    const double g = g_kernel(static_cast<std::int64_t>(m), lambda, x);
    terms[m] = pmf[m] * g * g;
  }
  return static_cast<double>(params.N()) * sorted_sum(std::move(terms));
}

}  // namespace detail

// u_{eps,n,N} = sqrt(N sum_m P_lambda(m) g^2_{m,lambda}(n eps N^(-1/p))).
inline AsymptoticRisk u_exact(const ProblemParams& params) {
  const double x = params.kernel_argument();
  const double u2 = detail::separation_squared(params, x);
  const double tail = static_cast<double>(params.N()) *
                      g_squared_tail_bound(params.lambda(), x, params.M_max());
  return AsymptoticRisk::from_u(std::sqrt(u2), RiskFormula::kExact, tail);
}

// u* = eps^2 n N^(2 - 2/p) / sqrt(2N).
inline AsymptoticRisk u_star(const ProblemParams& params) {
  const double N = static_cast<double>(params.N());
  const double eps = params.epsilon();
  const double u = eps * eps * params.n() * std::pow(N, 2.0 - 2.0 / params.p()) /
                   std::sqrt(2.0 * N);
  return AsymptoticRisk::from_u(u, RiskFormula::kStar);
}

// u(pi) for a symmetric three-point prior: eta * sqrt(N sum P g^2(n mu)).
inline AsymptoticRisk u_of_prior(const ProblemParams& params, const PriorSpec& prior) {
  prior.validate(params);
  const double x = params.n() * prior.mu;
  const double u2 = detail::separation_squared(params, x);
  const double tail = prior.eta * prior.eta * static_cast<double>(params.N()) *
                      g_squared_tail_bound(params.lambda(), x, params.M_max());
  return AsymptoticRisk::from_u(prior.eta * std::sqrt(u2), RiskFormula::kPrior, tail);
}

// Separation of the likelihood-ratio test against pi*:
// <w_LR, Delta(pi*)> / sqrt(<w_LR, Sigma w_LR>).
inline AsymptoticRisk u_lr(const ProblemParams& params) {
  const auto w = lr_weights(params);
  const auto delta = delta_star(params);
  const double numerator = test_statistic(w, delta.values);
  if (!(numerator > 0.0)) {
    throw DomainError("u_lr: <w_LR, Delta(pi*)> is not positive (degenerate alternative)");
  }
  const double variance = cov_quadratic(params, w);
  if (!(variance > 0.0)) throw DegenerateWeights("u_lr: LR weights have zero null variance");
  return AsymptoticRisk::from_u(numerator / std::sqrt(variance), RiskFormula::kLr);
}

// Expected sample size n with 4 sqrt(N log(1/R)) / (n eps^2) = 1 (p = 1).
inline double sample_complexity(std::int64_t N, double epsilon, double target_risk) {
  if (!(target_risk > 0.0 && target_risk <= 1.0)) {
    throw DomainError("sample_complexity: target risk must lie in (0, 1]");
  }
  if (N < 1 || !(epsilon > 0.0)) {
    throw DomainError("sample_complexity: need N >= 1 and epsilon > 0");
  }
  return 4.0 * std::sqrt(static_cast<double>(N) * std::log(1.0 / target_risk)) /
         (epsilon * epsilon);
}

// Large-u form of 2 Phi(-u/2) from Mill's ratio: 2 exp(-u^2/8) / (u sqrt(pi/2)).
inline double mills_ratio_risk(double u) {
  return 2.0 * std::exp(-u * u / 8.0) / (u * std::sqrt(std::numbers::pi / 2.0));
}

}  // namespace uniftest
