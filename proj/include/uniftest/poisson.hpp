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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "uniftest/error.hpp"
#include "uniftest/rng.hpp"

namespace uniftest {

// P[Pois(lambda) = m]. Products for small m, log space beyond m = 20.
inline double poisson_pmf(double lambda, std::int64_t m) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("poisson_pmf: lambda must be positive, got " +
                      std::to_string(lambda));
  }
  if (m < 0) {
    throw DomainError("poisson_pmf: negative count " + std::to_string(m));
  }
  if (m <= 20 && lambda < 700.0) {
    double value = std::exp(-lambda);
    for (std::int64_t k = 1; k <= m; ++k) value *= lambda / static_cast<double>(k);
    return value;
  }
  const double md = static_cast<double>(m);
  return std::exp(md * std::log(lambda) - lambda - boost::math::lgamma(md + 1.0));
}

// P_lambda(0..M_max) by the ratio recursion, seeded in log space when the
// rate is too large for exp(-lambda).
inline std::vector<double> poisson_pmf_table(double lambda, int M_max) {
  std::vector<double> table(static_cast<std::size_t>(M_max) + 1);
  if (lambda < 700.0) {
    double value = poisson_pmf(lambda, 0);
    for (int m = 0; m <= M_max; ++m) {
      if (m > 0) value *= lambda / m;
      table[static_cast<std::size_t>(m)] = value;
    }
  } else {
    for (int m = 0; m <= M_max; ++m) table[static_cast<std::size_t>(m)] = poisson_pmf(lambda, m);
  }
  return table;
}

// Upper bound on P[Pois(lambda) > M]. Terms are summed explicitly until the
// ratio lambda/(k+1) drops below 1/2 and the remainder is closed with the
// geometric majorant term * r / (1 - r). Returns the trivial bound 1 when M is
// below the mean.
inline double poisson_upper_tail_bound(double lambda, std::int64_t M) {
  if (lambda <= 0.0) return 0.0;
  if (M < 0 || static_cast<double>(M + 1) <= lambda) return 1.0;
  double term = poisson_pmf(lambda, M + 1);
  double sum = 0.0;
  for (std::int64_t k = M + 1;; ++k) {
    sum += term;
    const double ratio = lambda / static_cast<double>(k + 1);
    if (ratio < 0.5 && term <= 1e-18 * sum) {
      return sum + term * ratio / (1.0 - ratio);
    }
    if (ratio < 0.5 && term == 0.0) return sum;
    term *= ratio;
  }
}

inline constexpr double kTruncationTail = 1e-12;
inline constexpr int kTruncationFloor = 16;

// Smallest M >= 16 with P[Pois(lambda * (1 + spread)) > M] < 1e-12.
inline int default_truncation(double lambda, double spread) {
  const double rate = lambda * (1.0 + std::max(0.0, spread));
  int M = kTruncationFloor;
  while (poisson_upper_tail_bound(rate, M) >= kTruncationTail) ++M;
  return M;
}

// Deterministic Poisson variate generator for one fixed rate.
//
// Rates below 10 use inverse transform against a cached CDF table, larger
// rates use Hormann's transformed rejection (PTRS). The variate is a pure
// function of the stream's draws, so results do not depend on the standard
// library in use.
class PoissonSampler {
 public:
  explicit PoissonSampler(double rate) : rate_(rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) {
      throw DomainError("PoissonSampler: rate must be finite and >= 0, got " +
                        std::to_string(rate));
    }
    if (rate_ == 0.0) return;
    if (rate_ < kInversionLimit) {
      build_table();
    } else {
      sqrt_rate_ = std::sqrt(rate_);
      log_rate_ = std::log(rate_);
      b_ = 0.931 + 2.53 * sqrt_rate_;
      a_ = -0.059 + 0.02483 * b_;
      inv_alpha_ = 1.1239 + 1.1328 / (b_ - 3.4);
      v_r_ = 0.9277 - 3.6224 / (b_ - 2.0);
    }
  }

  double rate() const noexcept { return rate_; }

  std::int64_t operator()(rng::CoordinateStream& stream) const {
    if (rate_ == 0.0) return 0;
    if (rate_ < kInversionLimit) return invert(stream.next_uniform());
    return transformed_rejection(stream);
  }

  static constexpr double kInversionLimit = 10.0;

 private:
  void build_table() {
    double pmf = std::exp(-rate_);
    double cdf = pmf;
    cdf_.push_back(cdf);
    for (std::int64_t k = 1;; ++k) {
      pmf *= rate_ / static_cast<double>(k);
      cdf += pmf;
      cdf_.push_back(cdf);
      if (static_cast<double>(k) > rate_ && pmf < 1e-17) break;
    }
    last_pmf_ = pmf;
  }

  std::int64_t invert(double u) const {
    const auto size = static_cast<std::int64_t>(cdf_.size());
    for (std::int64_t k = 0; k < size; ++k) {
      if (u < cdf_[static_cast<std::size_t>(k)]) return k;
    }
    // Rounding left the table total a few ulps short of u; continue the
    // recursion past the table.
    double pmf = last_pmf_;
    double cdf = cdf_.back();
    std::int64_t k = size;
    while (pmf > 0.0) {
      pmf *= rate_ / static_cast<double>(k);
      cdf += pmf;
      if (u < cdf) return k;
      ++k;
    }
    return k;
  }

  std::int64_t transformed_rejection(rng::CoordinateStream& stream) const {
    for (;;) {
      const double u = stream.next_uniform() - 0.5;
      const double v = stream.next_uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a_ / us + b_) * u + rate_ + 0.43);
      if (us >= 0.07 && v <= v_r_) return static_cast<std::int64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      const double lhs = std::log(v) + std::log(inv_alpha_) - std::log(a_ / (us * us) + b_);
      const double rhs = -rate_ + k * log_rate_ - boost::math::lgamma(k + 1.0);
      if (lhs <= rhs) return static_cast<std::int64_t>(k);
    }
  }

  double rate_;
  std::vector<double> cdf_;
  double last_pmf_ = 0.0;
  double sqrt_rate_ = 0.0;
  double log_rate_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  double inv_alpha_ = 0.0;
  double v_r_ = 0.0;
};

}  // namespace uniftest
