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

#include <cfloat>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uniftest/error.hpp"
#include "uniftest/model.hpp"
#include "uniftest/numeric.hpp"
#include "uniftest/poisson.hpp"

namespace uniftest {

namespace detail {

inline void check_kernel_args(std::int64_t m, double lambda, const char* who) {
  if (m < 0) throw DomainError(std::string(who) + ": m must be >= 0");
  if (!(lambda > 0.0)) throw DomainError(std::string(who) + ": lambda must be positive");
}

// (1 + t)^m * exp(-x) - 1 with the sign of 1 + t handled separately.
inline double h_unchecked(std::int64_t m, double lambda, double x) {
  const double t = x / lambda;
  const double md = static_cast<double>(m);
  if (t > -1.0) return std::expm1(md * std::log1p(t) - x);
  if (t == -1.0) return (m == 0 ? std::exp(-x) : 0.0) - 1.0;
  const double magnitude = std::exp(md * std::log(-(1.0 + t)) - x);
  return (m % 2 == 0 ? magnitude : -magnitude) - 1.0;
}

// g for x >= 0. For |x/lambda| < 1 write 1 + g = e^s cosh(d) with
//   s = (m/2) log(1 - t^2),  d = m atanh(t) - x,
// so g = expm1(s) cosh(d) + 2 sinh(d/2)^2 has no cancellation between the
// two shifted kernels (each of which is O(x) while g is O(x^2)).
inline double g_nonnegative(std::int64_t m, double lambda, double x) {
  const double t = x / lambda;
  if (t < 1.0) {
    const double md = static_cast<double>(m);
    const double s = 0.5 * md * std::log1p(-t * t);
    const double d = md * std::atanh(t) - x;
    if (std::fabs(d) <= 20.0) {
      const double sh = std::sinh(0.5 * d);
      return std::expm1(s) * std::cosh(d) + 2.0 * sh * sh;
    }
    return 0.5 * (std::exp(s + d) + std::exp(s - d)) - 1.0;
  }
  return 0.5 * (h_unchecked(m, lambda, x) + h_unchecked(m, lambda, -x));
}

}  // namespace detail

// Relative change of P_lambda(m) when the rate lambda moves to lambda + x:
// h_{m,lambda}(x) = exp(-x) (1 + x/lambda)^m - 1.
inline double h_kernel(std::int64_t m, double lambda, double x) {
  detail::check_kernel_args(m, lambda, "h_kernel");
  return detail::h_unchecked(m, lambda, x);
}

// Symmetrized kernel g_{m,lambda}(x) = (h(x) + h(-x)) / 2. Evaluated on |x|,
// which makes it exactly even.
inline double g_kernel(std::int64_t m, double lambda, double x) {
  detail::check_kernel_args(m, lambda, "g_kernel");
  return detail::g_nonnegative(m, lambda, std::fabs(x));
}

// Second-order expansion of g around x = 0:
// (x^2 / (2 lambda^2)) (m(m-1) - 2 m lambda + lambda^2).
inline double g_quadratic_coefficient(std::int64_t m, double lambda) {
  const double md = static_cast<double>(m);
  return md * (md - 1.0) - 2.0 * md * lambda + lambda * lambda;
}

inline double g_quadratic_approx(std::int64_t m, double lambda, double x) {
  detail::check_kernel_args(m, lambda, "g_quadratic_approx");
  const double a = x / lambda;
  return 0.5 * a * a * g_quadratic_coefficient(m, lambda);
}

// Upper bound on sum_{m > M} P_lambda(m) |g_{m,lambda}(x)|, from
// |g| <= exp(|x|) (1 + |x|/lambda)^m + 1.
inline double g_tail_bound(double lambda, double x, int M) {
  const double ax = std::fabs(x);
  return std::exp(2.0 * ax) * poisson_upper_tail_bound(lambda + ax, M) +
         poisson_upper_tail_bound(lambda, M);
}

// Upper bound on sum_{m > M} P_lambda(m) g_{m,lambda}(x)^2, from
// g^2 <= 2 exp(2|x|) (1 + |x|/lambda)^{2m} + 2.
inline double g_squared_tail_bound(double lambda, double x, int M) {
  const double ax = std::fabs(x);
  const double grown = lambda * (1.0 + ax / lambda) * (1.0 + ax / lambda);
  return 2.0 * std::exp(2.0 * ax + grown - lambda) * poisson_upper_tail_bound(grown, M) +
         2.0 * poisson_upper_tail_bound(lambda, M);
}

// Truncation index for sums of P_lambda(m) g_{m,lambda}(x) over m: the
// tail of Pois(lambda + |x|) must fall below 1e-12 exp(-|x|) (floor 16).
inline int identity_truncation(double lambda, double x) {
  const double ax = std::fabs(x);
  const double rate = lambda + ax;
  int M = kTruncationFloor;
  while (std::exp(ax) * poisson_upper_tail_bound(rate, M) >= kTruncationTail) ++M;
  return M;
}

// sum_{m <= M} P_lambda(m) g_{m,lambda}(x). The full series vanishes for every
// real x, so this is the truncation (plus rounding) residual.
inline double kernel_identity_sum(double lambda, double x, int M) {
  detail::check_kernel_args(0, lambda, "kernel_identity_sum");
  const auto pmf = poisson_pmf_table(lambda, M);
  std::vector<double> terms(pmf.size());
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    terms[m] = pmf[m] * detail::g_nonnegative(static_cast<std::int64_t>(m), lambda,
                                              std::fabs(x));
  }
  return sorted_sum(std::move(terms));
}

// Mean shift of the histogram under a prior, Delta_m = E_pi[X_m] - mu0_m,
// truncated at M_max. tail_mass bounds the discarded part of the series
// plus the rounding error of summing the stored part, so that
// |sum(values)| <= tail_mass whenever the full series sums to zero.
struct DeltaVector {
  std::vector<double> values;
  double tail_mass = 0.0;

  int M_max() const noexcept { return static_cast<int>(values.size()) - 1; }
  double sum() const { return sorted_sum(values); }
};

// Delta(pi) for the symmetric three-point prior (eta, mu): the h-integral
// collapses to eta * g_{m,lambda}(n mu), so Delta_m = N eta P_lambda(m) g(n mu).
inline DeltaVector delta_of_prior(const ProblemParams& params, const PriorSpec& prior) {
  prior.validate(params);
  const double lambda = params.lambda();
  const double x = params.n() * prior.mu;
  const double scale = static_cast<double>(params.N()) * prior.eta;
  const auto pmf = poisson_pmf_table(lambda, params.M_max());
  DeltaVector delta;
  delta.values.resize(pmf.size());
  double abs_sum = 0.0;
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    delta.values[m] = scale * pmf[m] *
                      detail::g_nonnegative(static_cast<std::int64_t>(m), lambda, x);
    abs_sum += std::fabs(delta.values[m]);
  }
  const double rounding = 4.0 * static_cast<double>(pmf.size()) * DBL_EPSILON * abs_sum;
  delta.tail_mass = scale * g_tail_bound(lambda, x, params.M_max()) + rounding;
  return delta;
}

// Delta(pi*) for the least favorable two-point prior 1/N +- epsilon N^(-1/p).
inline DeltaVector delta_star(const ProblemParams& params) {
  return delta_of_prior(params, PriorSpec::least_favorable(params));
}

}  // namespace uniftest
