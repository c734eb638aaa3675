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
#include <cstdint>
#include <iostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uniftest/error.hpp"
#include "uniftest/kernels.hpp"
#include "uniftest/model.hpp"
#include "uniftest/normal.hpp"
#include "uniftest/numeric.hpp"
#include "uniftest/poisson.hpp"

namespace uniftest {

enum class TestFamily { kMinimax, kChisq, kCollision, kLr, kCustom };

inline std::string_view to_string(TestFamily family) {
  switch (family) {
    case TestFamily::kMinimax:
      return "minimax";
    case TestFamily::kChisq:
      return "chisq";
    case TestFamily::kCollision:
      return "collision";
    case TestFamily::kLr:
      return "lr";
    case TestFamily::kCustom:
      return "custom";
  }
  return "custom";
}

inline TestFamily parse_family(std::string_view name) {
  if (name == "minimax") return TestFamily::kMinimax;
  if (name == "chisq") return TestFamily::kChisq;
  if (name == "collision") return TestFamily::kCollision;
  if (name == "lr") return TestFamily::kLr;
  if (name == "custom") return TestFamily::kCustom;
  throw InvalidInput("unknown test family '" + std::string(name) + "'");
}

inline constexpr TestFamily kAllFamilies[] = {TestFamily::kMinimax, TestFamily::kChisq,
                                              TestFamily::kCollision, TestFamily::kLr};

// Expected histogram under the null, mu0_m = N P_lambda(m), m <= M_max.
struct NullMoments {
  std::vector<double> mu0;
  // P[Pois(lambda) > M_max]: the part of N not represented in mu0, as a
  // fraction of N.
  double tail_fraction = 0.0;
  std::int64_t N = 0;

  int M_max() const noexcept { return static_cast<int>(mu0.size()) - 1; }
};

inline NullMoments null_moments(const ProblemParams& params) {
  NullMoments moments;
  moments.N = params.N();
  moments.mu0 = poisson_pmf_table(params.lambda(), params.M_max());
  for (double& v : moments.mu0) v *= static_cast<double>(params.N());
  moments.tail_fraction = poisson_upper_tail_bound(params.lambda(), params.M_max());
  return moments;
}

namespace detail {

inline void check_truncation(int weights_M, int moments_M, const char* who) {
  if (weights_M != moments_M) {
    throw InvalidInput(std::string(who) + ": weights truncated at " +
                       std::to_string(weights_M) + " but problem truncation is " +
                       std::to_string(moments_M));
  }
}

inline void default_warning(const std::string& message) {
  std::cerr << "uniftest warning: " << message << '\n';
}

}  // namespace detail

// <w, mu0>, the null mean of T(w).
inline double null_mean(const NullMoments& moments, const WeightSequence& w) {
  detail::check_truncation(w.M_max(), moments.M_max(), "null_mean");
  CompensatedSum acc;
  for (int m = 0; m <= w.M_max(); ++m) acc.add(moments.mu0[static_cast<std::size_t>(m)] * w[m]);
  return acc.value();
}

// <w, Sigma w> for Sigma = diag(mu0) - mu0 mu0^T / N, evaluated in centered
// form sum mu0 (w - wbar)^2 + S wbar^2 (1 - S/N), with S = sum mu0 and wbar
// the mu0-weighted mean. The second term carries only truncated tail mass,
// so adding a constant to w leaves the value unchanged up to that mass.
inline double cov_quadratic(const NullMoments& moments, const WeightSequence& w,
                            void (*warn)(const std::string&) = detail::default_warning) {
  detail::check_truncation(w.M_max(), moments.M_max(), "cov_quadratic");
  CompensatedSum total;
  CompensatedSum first;
  for (int m = 0; m <= w.M_max(); ++m) {
    const double mu = moments.mu0[static_cast<std::size_t>(m)];
    total.add(mu);
    first.add(mu * w[m]);
  }
  const double S = total.value();
  const double wbar = first.value() / S;
  CompensatedSum centered;
  for (int m = 0; m <= w.M_max(); ++m) {
    const double d = w[m] - wbar;
    centered.add(moments.mu0[static_cast<std::size_t>(m)] * d * d);
  }
  const double value = centered.value() + S * wbar * wbar * moments.tail_fraction;
  if (value < 0.0) {
    if (warn) warn("cov_quadratic: negative quadratic form clamped to 0 (near-constant weights)");
    return 0.0;
  }
  return value;
}

inline double cov_quadratic(const ProblemParams& params, const WeightSequence& w) {
  return cov_quadratic(null_moments(params), w);
}

// Sigma^dagger v with Sigma^dagger = diag(mu0)^-1 - 1 1^T / N. Coordinates
// whose mu0 underflows below 1e-300 are dropped from the active support and
// reported as zero.
struct PinvResult {
  std::vector<double> values;
  std::vector<bool> active;
  int excluded = 0;
};

inline constexpr double kPinvSupportFloor = 1e-300;

inline PinvResult pinv_apply(const NullMoments& moments, std::span<const double> v) {
  if (static_cast<int>(v.size()) != moments.M_max() + 1) {
    throw InvalidInput("pinv_apply: vector length does not match the truncation");
  }
  PinvResult out;
  out.values.assign(v.size(), 0.0);
  out.active.assign(v.size(), true);
  CompensatedSum acc;
  for (std::size_t m = 0; m < v.size(); ++m) {
    if (moments.mu0[m] < kPinvSupportFloor) {
      out.active[m] = false;
      ++out.excluded;
      continue;
    }
    acc.add(v[m]);
  }
  const double shift = acc.value() / static_cast<double>(moments.N);
  for (std::size_t m = 0; m < v.size(); ++m) {
    if (out.active[m]) out.values[m] = v[m] / moments.mu0[m] - shift;
  }
  return out;
}

inline PinvResult pinv_apply(const ProblemParams& params, std::span<const double> v) {
  return pinv_apply(null_moments(params), v);
}

// Minimax weights w* = diag(mu0)^-1 Delta(pi*), in closed form
// w*_m = g_{m,lambda}(n epsilon N^(-1/p)).
inline WeightSequence minimax_weights(const ProblemParams& params) {
  const double lambda = params.lambda();
  const double x = params.kernel_argument();
  std::vector<double> w(static_cast<std::size_t>(params.M_max()) + 1);
  for (std::size_t m = 0; m < w.size(); ++m) w[m] = g_kernel(static_cast<std::int64_t>(m), lambda, x);
  return WeightSequence(std::move(w),
                        [lambda, x](std::int64_t m) { return g_kernel(m, lambda, x); });
}

// Chi-squared statistic sum_i (O_i - lambda)^2 / lambda as histogram weights.
inline WeightSequence chisq_weights(const ProblemParams& params) {
  const double lambda = params.lambda();
  std::vector<double> w(static_cast<std::size_t>(params.M_max()) + 1);
  for (std::size_t m = 0; m < w.size(); ++m) {
    const double d = static_cast<double>(m) - lambda;
    w[m] = d * d / lambda;
  }
  return WeightSequence(std::move(w));
}

// Number of categories observed at least twice.
inline WeightSequence collision_weights(const ProblemParams& params) {
  std::vector<double> w(static_cast<std::size_t>(params.M_max()) + 1, 1.0);
  w[0] = 0.0;
  if (w.size() > 1) w[1] = 0.0;
  return WeightSequence(std::move(w));
}

namespace detail {

inline double lr_weight(std::int64_t m, double lambda, double x) {
  const double g = g_kernel(m, lambda, x);
  if (!(1.0 + g > 0.0)) {
    throw DomainError("lr_weights: 1 + g_{m,lambda} <= 0 at m=" + std::to_string(m));
  }
  return std::log1p(g);
}

}  // namespace detail

// Log-likelihood-ratio weights against pi*: log(1 + g_{m,lambda}(n eps N^(-1/p))).
inline WeightSequence lr_weights(const ProblemParams& params) {
  const double lambda = params.lambda();
  const double x = params.kernel_argument();
  std::vector<double> w(static_cast<std::size_t>(params.M_max()) + 1);
  for (std::size_t m = 0; m < w.size(); ++m) {
    w[m] = detail::lr_weight(static_cast<std::int64_t>(m), lambda, x);
  }
  return WeightSequence(std::move(w),
                        [lambda, x](std::int64_t m) { return detail::lr_weight(m, lambda, x); });
}

inline WeightSequence family_weights(const ProblemParams& params, TestFamily family) {
  switch (family) {
    case TestFamily::kMinimax:
      return minimax_weights(params);
    case TestFamily::kChisq:
      return chisq_weights(params);
    case TestFamily::kCollision:
      return collision_weights(params);
    case TestFamily::kLr:
      return lr_weights(params);
    case TestFamily::kCustom:
      break;
  }
  throw InvalidInput("family_weights: custom weights must be supplied explicitly");
}

// T(w) = sum_m w_m X_m, overflow categories weighted by w.at(count).
inline double test_statistic(const WeightSequence& w, const Histogram& hist) {
  if (hist.M_max() != w.M_max()) {
    throw InvalidInput("test_statistic: histogram and weights use different truncation");
  }
  double total = 0.0;
  const auto counts = hist.counts();
  for (int m = 0; m <= w.M_max(); ++m) {
    total += w[m] * static_cast<double>(counts[static_cast<std::size_t>(m)]);
  }
  for (std::int64_t count : hist.overflow_values()) total += w.at(count);
  return total;
}

// T(w) for a real-valued (e.g. expected) histogram.
inline double test_statistic(const WeightSequence& w, std::span<const double> ordinates) {
  if (static_cast<int>(ordinates.size()) != w.M_max() + 1) {
    throw InvalidInput("test_statistic: ordinate vector length does not match the weights");
  }
  CompensatedSum acc;
  for (int m = 0; m <= w.M_max(); ++m) acc.add(w[m] * ordinates[static_cast<std::size_t>(m)]);
  return acc.value();
}

// Relative variance floor below which weights count as constant.
inline constexpr double kDegenerateVariance = 1e-12;

// Null centering and scale of T(w): <w, mu0> and sqrt(<w, Sigma w>).
struct NullStandardization {
  double mean = 0.0;
  double sd = 0.0;
};

inline NullStandardization null_standardization(const NullMoments& moments,
                                                const WeightSequence& w) {
  const double variance = cov_quadratic(moments, w, nullptr);
  double scale = 0.0;
  for (int m = 0; m <= w.M_max(); ++m) {
    scale += moments.mu0[static_cast<std::size_t>(m)] * w[m] * w[m];
  }
  if (w.is_constant() || !(variance > kDegenerateVariance * scale)) {
    throw DegenerateWeights("weights have zero null variance (constant modulo the null space)");
  }
  return {null_mean(moments, w), std::sqrt(variance)};
}

inline double standardize(const ProblemParams& params, const WeightSequence& w,
                          const Histogram& hist) {
  const auto z = null_standardization(null_moments(params), w);
  return (test_statistic(w, hist) - z.mean) / z.sd;
}

inline double standardize(const ProblemParams& params, const WeightSequence& w,
                          std::span<const double> ordinates) {
  const auto z = null_standardization(null_moments(params), w);
  return (test_statistic(w, ordinates) - z.mean) / z.sd;
}

// Linear test rejecting when (T(w) - <w, mu0>) / sqrt(<w, Sigma w>) > z_{1-alpha}.
// The null moments are bound at construction, so the object is tied to one
// ProblemParams.
class LinearTest {
 public:
  LinearTest(const ProblemParams& params, WeightSequence weights, double alpha,
             TestFamily family = TestFamily::kCustom)
      : weights_(std::move(weights)), family_(family) {
    detail::check_truncation(weights_.M_max(), params.M_max(), "LinearTest");
    standardization_ = null_standardization(null_moments(params), weights_);
    set_alpha(alpha);
  }

  static LinearTest for_family(const ProblemParams& params, TestFamily family, double alpha) {
    return LinearTest(params, family_weights(params, family), alpha, family);
  }

  const WeightSequence& weights() const noexcept { return weights_; }
  double alpha() const noexcept { return alpha_; }
  double threshold() const noexcept { return threshold_; }
  TestFamily family() const noexcept { return family_; }
  double null_mean() const noexcept { return standardization_.mean; }
  double null_sd() const noexcept { return standardization_.sd; }

  LinearTest with_alpha(double alpha) const {
    LinearTest copy = *this;
    copy.set_alpha(alpha);
    return copy;
  }

  double standardized(double statistic) const noexcept {
    return (statistic - standardization_.mean) / standardization_.sd;
  }
  double standardized(const Histogram& hist) const {
    return standardized(test_statistic(weights_, hist));
  }
  bool rejects(double standardized_statistic) const noexcept {
    return standardized_statistic > threshold_;
  }

 private:
  void set_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("LinearTest: alpha must lie in [0, 1]");
    alpha_ = alpha;
    threshold_ = normal_quantile(1.0 - alpha);
  }

  WeightSequence weights_;
  double alpha_ = 0.05;
  double threshold_ = 0.0;
  TestFamily family_;
  NullStandardization standardization_;
};

// Strict inequality: the boundary standardized value is accepted.
inline bool decide(const LinearTest& test, const Histogram& hist) {
  return test.rejects(test.standardized(hist));
}

// <w, Delta> / sqrt(<w, Sigma w>): the standardized mean shift of T(w).
inline double mean_shift_ratio(const ProblemParams& params, const WeightSequence& w,
                               const DeltaVector& delta) {
  detail::check_truncation(delta.M_max(), params.M_max(), "mean_shift_ratio");
  const auto moments = null_moments(params);
  const auto z = null_standardization(moments, w);
  return test_statistic(w, delta.values) / z.sd;
}

// Risk-optimal level: z_{1-alpha*} = <w, Delta> / (2 sqrt(<w, Sigma w>)).
// Weights are expected oriented so that the alternative shifts T upward.
inline double optimal_alpha(const ProblemParams& params, const WeightSequence& w,
                            const DeltaVector& delta) {
  const double ratio = mean_shift_ratio(params, w, delta);
  if (ratio < 0.0) {
    throw DomainError("optimal_alpha: <w, Delta> < 0, the test has no power against this prior");
  }
  return normal_cdf(-0.5 * ratio);
}

}  // namespace uniftest
