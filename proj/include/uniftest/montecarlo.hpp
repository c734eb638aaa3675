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
#include <optional>
#include <string>
#include <vector>

#include "uniftest/error.hpp"
#include "uniftest/kernels.hpp"
#include "uniftest/model.hpp"
#include "uniftest/normal.hpp"
#include "uniftest/parallel.hpp"
#include "uniftest/risk.hpp"
#include "uniftest/rng.hpp"
#include "uniftest/sampling.hpp"
#include "uniftest/statistics.hpp"

namespace uniftest {

inline constexpr std::size_t kMinTrials = 100;

// Histograms of `trials` independent trials of one arm. Trial t draws from
// the substream keyed by (seed, t, arm), so any worker count reproduces the
// same batch.
inline std::vector<Histogram> simulate_histograms(const ProblemParams& params,
                                                  const OccurrenceModel& model, rng::Arm arm,
                                                  std::size_t trials, std::uint64_t seed,
                                                  unsigned workers = 0) {
  const HistogramSampler sampler(model, params.N(), params.M_max());
  std::vector<Histogram> out(trials, Histogram(params.M_max()));
  parallel_for(trials, resolve_workers(workers), [&](std::size_t t) {
    sampler.sample(rng::trial_key(seed, t, arm), out[t]);
  });
  return out;
}

inline std::vector<Histogram> simulate_null(const ProblemParams& params, std::size_t trials,
                                            std::uint64_t seed, unsigned workers = 0) {
  return simulate_histograms(params, OccurrenceModel::null_model(params), rng::Arm::kNull,
                             trials, seed, workers);
}

inline std::vector<Histogram> simulate_prior(const ProblemParams& params, const PriorSpec& prior,
                                             std::size_t trials, std::uint64_t seed,
                                             unsigned workers = 0) {
  return simulate_histograms(params, OccurrenceModel::from_prior(params, prior),
                             rng::Arm::kAlternative, trials, seed, workers);
}

inline std::size_t count_rejections(const LinearTest& test, const std::vector<Histogram>& batch) {
  std::size_t rejected = 0;
  for (const auto& hist : batch) rejected += decide(test, hist) ? 1 : 0;
  return rejected;
}

// Empirical Type-I/Type-II rates of one test. empirical_risk is their sum;
// ci_halfwidth is the 95% normal-approximation half-width of that sum.
struct RiskReport {
  double alpha = 0.0;
  double type1_rate = 0.0;
  double type2_rate = 0.0;
  double empirical_risk = 0.0;
  double asymptotic_risk = 0.0;
  double ci_halfwidth = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const RiskReport&, const RiskReport&) = default;
};

// Limiting risk of a level-alpha linear test against the prior behind
// delta: alpha + Phi(z_{1-alpha} - <w, Delta> / sqrt(<w, Sigma w>)). At the
// risk-optimal alpha this is 2 Phi(-<w, Delta> / (2 sqrt(<w, Sigma w>))).
inline double linear_test_asymptotic_risk(const LinearTest& test, const DeltaVector& delta) {
  const double shift = test_statistic(test.weights(), delta.values) / test.null_sd();
  return test.alpha() + normal_cdf(test.threshold() - shift);
}

inline RiskReport make_report(const LinearTest& test, std::size_t null_rejections,
                              std::size_t alt_rejections, std::size_t trials,
                              std::uint64_t seed, double asymptotic) {
  RiskReport report;
  report.alpha = test.alpha();
  report.trials = trials;
  report.seed = seed;
  const double n = static_cast<double>(trials);
  report.type1_rate = static_cast<double>(null_rejections) / n;
  report.type2_rate = static_cast<double>(trials - alt_rejections) / n;
  report.empirical_risk = report.type1_rate + report.type2_rate;
  const double v1 = report.type1_rate * (1.0 - report.type1_rate) / n;
  const double v2 = report.type2_rate * (1.0 - report.type2_rate) / n;
  report.ci_halfwidth = 1.96 * std::sqrt(v1 + v2);
  report.asymptotic_risk = asymptotic;
  return report;
}

// Runs `trials` null trials and `trials` trials under the prior (a fresh Q
// per trial) and reports the error rates of `test`.
inline RiskReport estimate_risk(const ProblemParams& params, const LinearTest& test,
                                const PriorSpec& prior, std::size_t trials, std::uint64_t seed,
                                unsigned workers = 0) {
  if (trials < kMinTrials) {
    throw InvalidInput("estimate_risk: at least " + std::to_string(kMinTrials) +
                       " trials are required");
  }
  prior.validate(params);
  const auto null_batch = simulate_null(params, trials, seed, workers);
  const auto alt_batch = simulate_prior(params, prior, trials, seed, workers);
  const double asymptotic =
      linear_test_asymptotic_risk(test, delta_of_prior(params, prior));
  return make_report(test, count_rejections(test, null_batch), count_rejections(test, alt_batch),
                     trials, seed, asymptotic);
}

// Linear test of the given family at its risk-optimal level against pi*.
inline LinearTest optimal_test(const ProblemParams& params, TestFamily family) {
  auto weights = family_weights(params, family);
  const double alpha = optimal_alpha(params, weights, delta_star(params));
  return LinearTest(params, std::move(weights), alpha, family);
}

// Shared inputs of the curve and comparison tables: n, p, xi and the
// optional level are fixed; N follows from each lambda as round(n / lambda).
struct SweepBase {
  double n = 10000.0;
  double p = 1.0;
  double xi = ProblemParams::kDefaultXi;
  double M_bound = ProblemParams::kDefaultMBound;
  std::optional<double> alpha;  // risk-optimal alpha* when unset
};

inline std::int64_t categories_for(double n, double lambda) {
  if (!(lambda > 0.0)) throw InvalidParams("lambda must be positive");
  return static_cast<std::int64_t>(std::llround(n / lambda));
}

// One (epsilon, lambda, family) point of a risk table.
struct RiskRow {
  double epsilon = 0.0;
  double lambda = 0.0;
  double n = 0.0;
  std::int64_t N = 0;
  double p = 1.0;
  TestFamily family = TestFamily::kMinimax;
  double u_exact = 0.0;
  double u_star = 0.0;
  RiskReport report;
  std::string config;   // comparison preset label, empty for curves
  double risk_minimax = 0.0;  // 2 Phi(-u*/2), the asymptotic minimax risk
  std::optional<std::string> error;

  double ratio_empirical() const { return report.empirical_risk / risk_minimax; }
  double ratio_asymptotic() const { return report.asymptotic_risk / risk_minimax; }
};

namespace detail {

inline std::vector<RiskRow> sweep(const SweepBase& base, const std::vector<double>& epsilon_grid,
                                  double lambda, const std::vector<TestFamily>& families,
                                  const std::string& config, std::size_t trials,
                                  std::uint64_t seed, unsigned workers) {
  std::vector<RiskRow> rows;
  auto blank = [&](double eps, TestFamily family) {
    RiskRow row;
    row.epsilon = eps;
    row.lambda = lambda;
    row.n = base.n;
    row.p = base.p;
    row.family = family;
    row.config = config;
    row.report.trials = trials;
    row.report.seed = seed;
    return row;
  };
  std::optional<ProblemParams> null_params;
  std::int64_t N = 0;
  try {
    N = categories_for(base.n, lambda);
    null_params = ProblemParams::make(base.n, N, 0.0, base.p, base.xi, base.M_bound);
  } catch (const ValidationError& e) {
    for (double eps : epsilon_grid) {
      for (auto family : families) {
        auto row = blank(eps, family);
        row.error = e.what();
        rows.push_back(std::move(row));
      }
    }
    return rows;
  }
  if (trials < kMinTrials) {
    throw InvalidInput("sweep: at least " + std::to_string(kMinTrials) + " trials are required");
  }
  const auto null_batch = simulate_null(*null_params, trials, seed, workers);
  for (double eps : epsilon_grid) {
    std::optional<ProblemParams> params;
    std::string failure;
    try {
      params = ProblemParams::make(base.n, N, eps, base.p, base.xi, base.M_bound);
    } catch (const ValidationError& e) {
      failure = e.what();
    }
    if (!params) {
      for (auto family : families) {
        auto row = blank(eps, family);
        row.N = N;
        row.lambda = base.n / static_cast<double>(N);
        row.error = failure;
        rows.push_back(std::move(row));
      }
      continue;
    }
    const auto prior = PriorSpec::least_favorable(*params);
    const auto delta = delta_star(*params);
    const double ue = u_exact(*params).u;
    const auto star = u_star(*params);
    std::optional<std::vector<Histogram>> alt_batch;
    for (auto family : families) {
      auto row = blank(eps, family);
      row.N = N;
      row.lambda = params->lambda();
      row.u_exact = ue;
      row.u_star = star.u;
      row.risk_minimax = star.risk;
      try {
        auto test = optimal_test(*params, family);
        if (base.alpha) test = test.with_alpha(*base.alpha);
        if (!alt_batch) alt_batch = simulate_prior(*params, prior, trials, seed, workers);
        row.report = make_report(test, count_rejections(test, null_batch),
                                 count_rejections(test, *alt_batch), trials, seed,
                                 linear_test_asymptotic_risk(test, delta));
      } catch (const Error& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace detail

// Empirical and asymptotic risk under pi* over an (epsilon, lambda) grid at
// fixed n. Invalid grid points come back as rows carrying an error message.
inline std::vector<RiskRow> risk_curve(const SweepBase& base,
                                       const std::vector<double>& epsilon_grid,
                                       const std::vector<double>& lambda_grid, TestFamily family,
                                       std::size_t trials, std::uint64_t seed,
                                       unsigned workers = 0) {
  if (epsilon_grid.empty() || lambda_grid.empty()) {
    throw InvalidInput("risk_curve: grids must be non-empty");
  }
  std::vector<RiskRow> rows;
  for (double lambda : lambda_grid) {
    auto part = detail::sweep(base, epsilon_grid, lambda, {family}, "", trials, seed, workers);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

struct CompareConfig {
  std::string label;
  double lambda = 0.1;
};

// The two sample-size regimes n = N/10 and n = N/2.
inline std::vector<CompareConfig> default_compare_configs() {
  return {{"n=N/10", 0.1}, {"n=N/2", 0.5}};
}

// Risk of the chisq, collision, minimax and LR tests relative to the
// asymptotic minimax risk 2 Phi(-u*/2), each test at its own alpha* under
// pi*. Every family is evaluated on the same simulated histograms.
inline std::vector<RiskRow> compare_tests(const SweepBase& base,
                                          const std::vector<double>& epsilon_grid,
                                          const std::vector<CompareConfig>& configs,
                                          std::size_t trials, std::uint64_t seed,
                                          unsigned workers = 0) {
  if (epsilon_grid.empty() || configs.empty()) {
    throw InvalidInput("compare_tests: grids must be non-empty");
  }
  const std::vector<TestFamily> families = {TestFamily::kChisq, TestFamily::kCollision,
                                            TestFamily::kMinimax, TestFamily::kLr};
  std::vector<RiskRow> rows;
  for (const auto& config : configs) {
    auto part = detail::sweep(base, epsilon_grid, config.lambda, families, config.label, trials,
                              seed, workers);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

}  // namespace uniftest
