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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uniftest/error.hpp"
#include "uniftest/kernels.hpp"
#include "uniftest/model.hpp"
#include "uniftest/montecarlo.hpp"
#include "uniftest/normal.hpp"
#include "uniftest/risk.hpp"
#include "uniftest/statistics.hpp"

namespace uniftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst_residual = 0.0;
  double tolerance = 0.0;
  std::string grid_description;
};

namespace detail {

inline CheckResult make_check(std::string name, double worst, double tolerance,
                              std::string grid) {
  CheckResult result;
  result.name = std::move(name);
  result.worst_residual = worst;
  result.tolerance = tolerance;
  result.passed = std::isfinite(worst) && worst <= tolerance;
  result.grid_description = std::move(grid);
  return result;
}

template <class Range>
std::string join(const Range& values) {
  std::ostringstream out;
  out.precision(6);
  bool first = true;
  for (const auto& v : values) {
    out << (first ? "" : ",") << v;
    first = false;
  }
  return out.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Kernel and mean-shift identities

struct IdentityGrid {
  std::vector<double> lambdas = {0.1, 0.5, 1.0, 2.0, 5.0};
  std::vector<double> arguments = {-0.3, -0.1, -0.01, 0.01, 0.1, 0.3};
  std::vector<double> epsilons = {0.01, 0.1, 0.3};
  std::int64_t N = 10000;
  double p = 1.0;
  std::optional<int> M_max;  // forced truncation; automatic when unset
};

inline constexpr double kIdentityTolerance = 1e-10;

// sum_m P_lambda(m) g_{m,lambda}(x) = 0 and, for pi*, sum_m Delta_m = 0
// up to the certified truncation mass.
inline CheckResult check_identities(const IdentityGrid& grid = {}) {
  double worst = 0.0;
  for (double lambda : grid.lambdas) {
    for (double x : grid.arguments) {
      const int M = grid.M_max ? *grid.M_max : identity_truncation(lambda, x);
      worst = std::max(worst, std::fabs(kernel_identity_sum(lambda, x, M)));
    }
    for (double eps : grid.epsilons) {
      auto params = ProblemParams::make(lambda * static_cast<double>(grid.N), grid.N, eps, grid.p);
      if (grid.M_max) params = params.with_truncation(*grid.M_max);
      const auto delta = delta_star(params);
      worst = std::max(worst, std::max(0.0, std::fabs(delta.sum()) - delta.tail_mass));
    }
  }
  std::string description = "lambda={" + detail::join(grid.lambdas) + "} x={" +
                            detail::join(grid.arguments) + "} eps={" +
                            detail::join(grid.epsilons) + "} N=" + std::to_string(grid.N);
  if (grid.M_max) description += " M_max=" + std::to_string(*grid.M_max);
  return detail::make_check("identities", worst, kIdentityTolerance, description);
}

// ---------------------------------------------------------------------------
// Generalized inverse of the null covariance

inline constexpr int kPinvMaxDimension = 64;
inline constexpr double kPinvTolerance = 1e-8;

// Dense check that diag(1/mu0) - 11^T/N is a generalized inverse of
// Sigma = diag(mu0) - mu0 mu0^T / N on the support mu0 >= 1e-300, and that
// Sigma 1 vanishes. Residuals are relative Frobenius norms.
inline CheckResult check_pinv(const ProblemParams& params, int M_max) {
  if (M_max < 0 || M_max > kPinvMaxDimension) {
    throw InvalidInput("check_pinv: M_max must lie in [0, " + std::to_string(kPinvMaxDimension) +
                       "]");
  }
  const auto moments = null_moments(params.with_truncation(M_max));
  std::vector<double> active;
  for (double mu : moments.mu0) {
    if (mu >= kPinvSupportFloor) active.push_back(mu);
  }
  const auto k = static_cast<Eigen::Index>(active.size());
  const double N = static_cast<double>(params.N());
  Eigen::VectorXd mu(k);
  for (Eigen::Index i = 0; i < k; ++i) mu(i) = active[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd sigma =
      Eigen::MatrixXd(mu.asDiagonal()) - mu * mu.transpose() / N;
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(k, k);
  const Eigen::MatrixXd pinv =
      Eigen::MatrixXd(mu.cwiseInverse().asDiagonal()) - ones / N;

  const double r1 = (sigma * pinv * sigma - sigma).norm() / sigma.norm();
  const double r2 = (pinv * sigma * pinv - pinv).norm() / pinv.norm();
  const double r3 = (sigma * Eigen::VectorXd::Ones(k)).norm() / sigma.norm();
  std::ostringstream description;
  description << "lambda=" << params.lambda() << " N=" << params.N() << " M_max=" << M_max
              << " active=" << k << " excluded=" << (M_max + 1 - k);
  return detail::make_check("pinv", std::max({r1, r2, r3}), kPinvTolerance, description.str());
}

// ---------------------------------------------------------------------------
// Convexity of the second-moment kernel

// f(t, s) = (1/N) sum_m P_lambda(m) g_{m,lambda}(n t) g_{m,lambda}(n s).
inline double f_kernel(const ProblemParams& params, double t, double s) {
  const double lambda = params.lambda();
  const double n = params.n();
  const auto pmf = poisson_pmf_table(lambda, params.M_max());
  std::vector<double> terms(pmf.size());
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    const auto mi = static_cast<std::int64_t>(m);
    terms[m] = pmf[m] * g_kernel(mi, lambda, n * t) * g_kernel(mi, lambda, n * s);
  }
  return sorted_sum(std::move(terms)) / static_cast<double>(params.N());
}

inline constexpr double kConvexityTolerance = 1e-12;

// Second differences of t -> f(t, s) on a uniform grid over (0, xi/N] for
// every s on the same grid. worst_residual is the largest negative second
// difference; the description names the first grid point where convexity
// breaks, if any.
inline CheckResult check_f_convexity(const ProblemParams& params, int grid_size = 50) {
  if (grid_size < 3) throw InvalidInput("check_f_convexity: grid_size must be >= 3");
  const double lambda = params.lambda();
  const double n = params.n();
  const double step = params.xi() / static_cast<double>(params.N()) / grid_size;
  const auto pmf = poisson_pmf_table(lambda, params.M_max());
  // g at every grid point, so f(t_i, s_j) = (1/N) sum_m P(m) G[i][m] G[j][m].
  std::vector<std::vector<double>> G(static_cast<std::size_t>(grid_size));
  for (int i = 0; i < grid_size; ++i) {
    auto& row = G[static_cast<std::size_t>(i)];
    row.resize(pmf.size());
    for (std::size_t m = 0; m < pmf.size(); ++m) {
      row[m] = g_kernel(static_cast<std::int64_t>(m), lambda, n * step * (i + 1));
    }
  }
  auto f = [&](int i, int j) {
    std::vector<double> terms(pmf.size());
    for (std::size_t m = 0; m < pmf.size(); ++m) {
      terms[m] = pmf[m] * G[static_cast<std::size_t>(i)][m] * G[static_cast<std::size_t>(j)][m];
    }
    return sorted_sum(std::move(terms)) / static_cast<double>(params.N());
  };
  double worst = 0.0;
  std::optional<double> boundary;
  for (int j = 0; j < grid_size; ++j) {
    std::vector<double> column(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i) column[static_cast<std::size_t>(i)] = f(i, j);
    for (int i = 1; i + 1 < grid_size; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const double second = column[u - 1] - 2.0 * column[u] + column[u + 1];
      if (second < -kConvexityTolerance) {
        const double t = step * (i + 1);
        if (!boundary || t < *boundary) boundary = t;
      }
      worst = std::max(worst, -second);
    }
  }
  std::ostringstream description;
  description << "lambda=" << lambda << " N=" << params.N() << " xi=" << params.xi()
              << " grid=" << grid_size << "x" << grid_size << " t,s in (0, "
              << params.xi() / static_cast<double>(params.N()) << "]";
  if (boundary) {
    description << " convexity fails from t=" << *boundary << " (xi_eff="
                << *boundary * static_cast<double>(params.N()) << ")";
  }
  return detail::make_check("f_convexity", worst, kConvexityTolerance, description.str());
}

// ---------------------------------------------------------------------------
// Least-favorable prior search

// Uniform eta_points x mu_points grid over (0, 1] x (0, xi/N], unless explicit
// etas/mus are supplied.
struct OptimizerGrid {
  int eta_points = 40;
  int mu_points = 40;
  std::vector<double> etas;
  std::vector<double> mus;
};

inline constexpr double kFeasibilitySlack = 1e-12;

struct OptimizerResult {
  double eta = 0.0;
  double mu = 0.0;
  double objective = 0.0;
  double u_exact_squared = 0.0;
  std::size_t feasible_points = 0;
  double eta_cell = 0.0;
  double mu_cell = 0.0;
};

namespace detail {

inline std::vector<double> uniform_grid(double upper, int points) {
  if (points < 1) throw InvalidInput("optimizer grid: point counts must be positive");
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 1; i <= points; ++i) out[static_cast<std::size_t>(i - 1)] = upper * i / points;
  return out;
}

// Largest spacing between neighbouring grid values (including the gap to 0).
inline double cell_size(std::vector<double> grid) {
  std::sort(grid.begin(), grid.end());
  double cell = grid.front();
  for (std::size_t i = 1; i < grid.size(); ++i) cell = std::max(cell, grid[i] - grid[i - 1]);
  return cell;
}

}  // namespace detail

// Minimizes eta^2 N sum_m P_lambda(m) g^2(n mu) over the grid subject to
// eta N mu^p >= epsilon^p.
inline OptimizerResult grid_minimize_prior(const ProblemParams& params,
                                           const OptimizerGrid& grid = {}) {
  const double N = static_cast<double>(params.N());
  const auto etas = grid.etas.empty() ? detail::uniform_grid(1.0, grid.eta_points) : grid.etas;
  const auto mus =
      grid.mus.empty() ? detail::uniform_grid(params.xi() / N, grid.mu_points) : grid.mus;
  for (double eta : etas) {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidInput("optimizer grid: eta outside (0, 1]");
  }
  for (double mu : mus) {
    if (!(mu > 0.0 && mu <= params.xi() / N * (1.0 + kFeasibilitySlack))) {
      throw InvalidInput("optimizer grid: mu outside (0, xi/N]");
    }
  }
  const double target = std::pow(params.epsilon(), params.p());
  OptimizerResult result;
  result.objective = std::numeric_limits<double>::infinity();
  result.eta_cell = detail::cell_size(etas);
  result.mu_cell = detail::cell_size(mus);
  for (double mu : mus) {
    const double base = detail::separation_squared(params, params.n() * mu);
    for (double eta : etas) {
      if (eta * N * std::pow(mu, params.p()) < target * (1.0 - kFeasibilitySlack)) continue;
      ++result.feasible_points;
      const double value = eta * eta * base;
      if (value < result.objective) {
        result.objective = value;
        result.eta = eta;
        result.mu = mu;
      }
    }
  }
  if (result.feasible_points == 0) {
    throw ConfigError("grid_minimize_prior: no grid point satisfies eta * N * mu^p >= epsilon^p");
  }
  const double ue = u_exact(params).u;
  result.u_exact_squared = ue * ue;
  return result;
}

// The grid minimizer must sit within one cell of (1, epsilon N^{-1/p}) and
// u_exact^2 may not exceed any feasible grid value (relative slack 1e-12).
// worst_residual is the larger of the cell distance beyond one cell and the
// relative excess of u_exact^2 over the grid minimum.
inline CheckResult check_optimizer(const ProblemParams& params, const OptimizerGrid& grid = {}) {
  const auto result = grid_minimize_prior(params, grid);
  const double cells = std::max(std::fabs(result.eta - 1.0) / result.eta_cell,
                                std::fabs(result.mu - params.perturbation()) / result.mu_cell);
  const double excess = (result.u_exact_squared - result.objective) / result.objective;
  const double worst = std::max(std::max(0.0, cells - 1.0), std::max(0.0, excess));
  std::ostringstream description;
  description << "lambda=" << params.lambda() << " N=" << params.N() << " p=" << params.p()
              << " eps=" << params.epsilon() << " feasible=" << result.feasible_points
              << " argmin=(" << result.eta << "," << result.mu << ") expected=(1,"
              << params.perturbation() << ")";
  return detail::make_check("optimizer", worst, kFeasibilitySlack, description.str());
}

// ---------------------------------------------------------------------------
// Asymptotic normality of the minimax statistic

inline constexpr std::size_t kMinNormalityTrials = 2000;
inline constexpr double kNormalityTolerance = 0.025;

// Kolmogorov-Smirnov distance between the sample and Phi.
inline double ks_distance_normal(std::vector<double> sample) {
  if (sample.empty()) throw InvalidInput("ks_distance_normal: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = normal_cdf(sample[i]);
    worst = std::max({worst, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return worst;
}

struct NormalityResult {
  double ks_null = 0.0;
  double ks_prior = 0.0;
};

// Under H0, (T - <w, mu0>) / sd; under pi*, (T - <w, mu0 + Delta>) / sd,
// both with the null sd.
inline NormalityResult normality_distances(const ProblemParams& params, TestFamily family,
                                           std::size_t trials, std::uint64_t seed,
                                           unsigned workers = 0) {
  if (trials < kMinNormalityTrials) {
    throw InvalidInput("normality check: at least " + std::to_string(kMinNormalityTrials) +
                       " trials are required");
  }
  const auto weights = family_weights(params, family);
  const auto z = null_standardization(null_moments(params), weights);
  const double shift = test_statistic(weights, delta_star(params).values);
  auto standardized = [&](const std::vector<Histogram>& batch, double center) {
    std::vector<double> out(batch.size());
    for (std::size_t t = 0; t < batch.size(); ++t) {
      out[t] = (test_statistic(weights, batch[t]) - center) / z.sd;
    }
    return out;
  };
  NormalityResult result;
  result.ks_null = ks_distance_normal(standardized(simulate_null(params, trials, seed, workers),
                                                   z.mean));
  result.ks_prior = ks_distance_normal(standardized(
      simulate_prior(params, PriorSpec::least_favorable(params), trials, seed, workers),
      z.mean + shift));
  return result;
}

inline CheckResult check_normality(const ProblemParams& params, std::size_t trials,
                                   std::uint64_t seed, unsigned workers = 0,
                                   TestFamily family = TestFamily::kMinimax) {
  const auto result = normality_distances(params, family, trials, seed, workers);
  std::ostringstream description;
  description << "family=" << to_string(family) << " lambda=" << params.lambda()
              << " N=" << params.N() << " eps=" << params.epsilon() << " trials=" << trials
              << " seed=" << seed << " ks_null=" << result.ks_null
              << " ks_prior=" << result.ks_prior;
  return detail::make_check("normality", std::max(result.ks_null, result.ks_prior),
                            kNormalityTolerance, description.str());
}

// ---------------------------------------------------------------------------
// Second-order approximation of g

struct QuadraticGrid {
  std::vector<std::int64_t> ms = {0, 1, 2, 3, 4, 5, 6, 8, 10};
  std::vector<double> lambdas = {1.0};
  std::vector<double> arguments = {-0.1, -0.05, -0.01, -0.001, 0.001, 0.01, 0.05, 0.1};
};

inline constexpr double kQuadraticRelativeTolerance = 0.05;
inline constexpr double kQuadraticAbsoluteTolerance = 1e-6;

// Relative error against 5% where the quadratic coefficient is non-zero;
// where it vanishes the absolute error against 1e-6, rescaled onto 5%.
inline CheckResult check_quadratic_approx(const QuadraticGrid& grid = {}) {
  double worst = 0.0;
  for (auto m : grid.ms) {
    for (double lambda : grid.lambdas) {
      const double coefficient = g_quadratic_coefficient(m, lambda);
      for (double x : grid.arguments) {
        const double exact = g_kernel(m, lambda, x);
        const double approx = g_quadratic_approx(m, lambda, x);
        double residual;
        if (std::fabs(coefficient) > 1e-12) {
          residual = std::fabs(exact - approx) / std::fabs(approx);
        } else {
          residual = std::fabs(exact - approx) / kQuadraticAbsoluteTolerance *
                     kQuadraticRelativeTolerance;
        }
        worst = std::max(worst, residual);
      }
    }
  }
  std::string description = "m={" + detail::join(grid.ms) + "} lambda={" +
                            detail::join(grid.lambdas) + "} x={" + detail::join(grid.arguments) +
                            "}";
  return detail::make_check("quadratic_approx", worst, kQuadraticRelativeTolerance, description);
}

// ---------------------------------------------------------------------------
// Default suite

struct SuiteOptions {
  std::size_t normality_trials = 5000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

inline std::vector<CheckResult> run_verify_suite(const SuiteOptions& options = {}) {
  std::vector<CheckResult> results;
  results.push_back(check_identities());
  for (double lambda : {0.1, 1.0, 5.0}) {
    const std::int64_t N = 10000;
    results.push_back(check_pinv(ProblemParams::make(lambda * N, N, 0.1, 1.0), 32));
  }
  results.push_back(check_f_convexity(ProblemParams::make(10000, 10000, 0.1, 1.0)));
  for (double lambda : {0.5, 1.0}) {
    const std::int64_t N = 10000;
    results.push_back(check_optimizer(ProblemParams::make(lambda * N, N, 0.1, 1.0)));
  }
  results.push_back(check_normality(ProblemParams::make(10000, 10000, 0.1, 1.0),
                                    options.normality_trials, options.seed, options.workers));
  results.push_back(check_quadratic_approx());
  return results;
}

}  // namespace uniftest
