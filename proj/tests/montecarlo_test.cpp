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
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "uniftest/montecarlo.hpp"

namespace uniftest {
namespace {

ProblemParams base() { return ProblemParams::make(10000, 10000, 0.1, 1.0); }

TEST(ResolveWorkers, ExplicitThenEnvironment) {
  EXPECT_EQ(resolve_workers(3), 3u);
  ::setenv(kThreadsEnv, "5", 1);
  EXPECT_EQ(resolve_workers(0), 5u);
  ::setenv(kThreadsEnv, "0", 1);
  EXPECT_GE(resolve_workers(0), 1u);
  ::unsetenv(kThreadsEnv);
  EXPECT_GE(resolve_workers(0), 1u);
}

TEST(ParallelFor, RethrowsAndCoversRange) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 7, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 57) throw DomainError("boom");
                            }),
               DomainError);
}

TEST(EstimateRisk, AlwaysRejectingTest) {
  const auto params = base();
  const auto test = LinearTest::for_family(params, TestFamily::kMinimax, 1.0);
  const auto report = estimate_risk(params, test, PriorSpec::least_favorable(params), 200, 1);
  EXPECT_EQ(report.type1_rate, 1.0);
  EXPECT_EQ(report.type2_rate, 0.0);
  EXPECT_EQ(report.empirical_risk, 1.0);
  EXPECT_EQ(report.ci_halfwidth, 0.0);
  EXPECT_EQ(report.asymptotic_risk, 1.0);
}

TEST(EstimateRisk, MinimaxMatchesTheory) {
  const auto params = base();
  const auto test = optimal_test(params, TestFamily::kMinimax);
  const auto report =
      estimate_risk(params, test, PriorSpec::least_favorable(params), 10000, 1);
  const double theory = asymptotic_risk(u_exact(params).u);
  EXPECT_NEAR(report.asymptotic_risk, theory, 1e-12);
  EXPECT_NEAR(report.empirical_risk, theory, 0.03);
  EXPECT_NEAR(report.ci_halfwidth,
              1.96 * std::sqrt(report.type1_rate * (1 - report.type1_rate) / 1e4 +
                               report.type2_rate * (1 - report.type2_rate) / 1e4),
              1e-15);
  EXPECT_EQ(report.trials, 10000u);
  EXPECT_EQ(report.seed, 1u);
}

TEST(EstimateRisk, Preconditions) {
  const auto params = base();
  const auto test = optimal_test(params, TestFamily::kMinimax);
  EXPECT_THROW(estimate_risk(params, test, PriorSpec::least_favorable(params), 99, 1),
               InvalidInput);
  EXPECT_THROW(estimate_risk(params, test, PriorSpec{1.0, 1.0}, 100, 1), InvalidPrior);
}

TEST(EstimateRisk, DeterministicAcrossWorkers) {
  const auto params = ProblemParams::make(5000, 10000, 0.1, 1.0);
  const auto prior = PriorSpec::least_favorable(params);
  const auto test = optimal_test(params, TestFamily::kChisq);
  const auto one = estimate_risk(params, test, prior, 3000, 42, 1);
  EXPECT_EQ(one, estimate_risk(params, test, prior, 3000, 42, 4));
  EXPECT_EQ(one, estimate_risk(params, test, prior, 3000, 42, 16));
  EXPECT_NE(one, estimate_risk(params, test, prior, 3000, 43, 4));
  EXPECT_EQ(simulate_null(params, 500, 9, 1), simulate_null(params, 500, 9, 16));
}

TEST(SizeCalibration, AllFamilies) {
  const auto params = base();
  const auto batch = simulate_null(params, 10000, 17);
  for (auto family : kAllFamilies) {
    for (double alpha : {0.01, 0.05, 0.1}) {
      const auto test = LinearTest::for_family(params, family, alpha);
      const double rate = static_cast<double>(count_rejections(test, batch)) / 1e4;
      const double se = std::sqrt(alpha * (1 - alpha) / 1e4);
      EXPECT_NEAR(rate, alpha, 3 * se) << to_string(family) << " " << alpha;
    }
  }
}

TEST(RiskCurve, ShapeAndMonotonicity) {
  SweepBase sweep;
  const std::vector<double> eps = {0.02, 0.1, 0.2, 0.3};
  const auto rows = risk_curve(sweep, eps, {0.5, 1.0}, TestFamily::kMinimax, 2000, 3);
  ASSERT_EQ(rows.size(), 8u);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const auto& r = rows[l * eps.size() + i];
      EXPECT_FALSE(r.error.has_value());
      EXPECT_EQ(r.epsilon, eps[i]);
      if (i > 0) {
        const auto& prev = rows[l * eps.size() + i - 1];
        EXPECT_LT(r.report.asymptotic_risk, prev.report.asymptotic_risk);
        EXPECT_LE(r.report.empirical_risk,
                  prev.report.empirical_risk + 3 * (r.report.ci_halfwidth + prev.report.ci_halfwidth));
        EXPECT_GT(r.u_star, prev.u_star);
      }
    }
  }
  // Larger lambda at fixed n means fewer categories and a larger u*.
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_GT(rows[eps.size() + i].u_star, rows[i].u_star);
    EXPECT_EQ(rows[i].N, 20000);
    EXPECT_EQ(rows[eps.size() + i].N, 10000);
  }
}

TEST(RiskCurve, SmallEpsilonApproachesOne) {
  SweepBase sweep;
  const auto rows = risk_curve(sweep, {1e-4}, {1.0}, TestFamily::kMinimax, 4000, 5);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].report.asymptotic_risk, 1.0, 1e-6);
  EXPECT_NEAR(rows[0].report.empirical_risk, 1.0, 3 * rows[0].report.ci_halfwidth + 0.01);
}

TEST(RiskCurve, InvalidPointsBecomeErrorRows) {
  SweepBase sweep;
  // p = 1 requires epsilon <= xi = 0.5.
  const auto rows = risk_curve(sweep, {0.1, 0.6}, {1.0}, TestFamily::kMinimax, 200, 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].error.has_value());
  ASSERT_TRUE(rows[1].error.has_value());
  EXPECT_NE(rows[1].error->find("alternative set is empty"), std::string::npos);
  const auto bad_lambda = risk_curve(sweep, {0.1}, {50.0}, TestFamily::kMinimax, 200, 1);
  ASSERT_TRUE(bad_lambda[0].error.has_value());
  EXPECT_THROW(risk_curve(sweep, {}, {1.0}, TestFamily::kMinimax, 200, 1), InvalidInput);
}

TEST(CompareTests, FamiliesShareHistograms) {
  SweepBase sweep;
  const auto rows = compare_tests(sweep, {0.05, 0.15}, default_compare_configs(), 2000, 7);
  ASSERT_EQ(rows.size(), 2u * 2u * 4u);
  for (const auto& r : rows) {
    ASSERT_FALSE(r.error.has_value()) << *r.error;
    EXPECT_NEAR(r.risk_minimax, asymptotic_risk(r.u_star), 1e-15);
    EXPECT_GT(r.ratio_empirical(), 0.0);
    if (r.family == TestFamily::kMinimax) {
      EXPECT_NEAR(r.report.asymptotic_risk, asymptotic_risk(r.u_exact), 1e-9);
    }
  }
  EXPECT_EQ(rows[0].config, "n=N/10");
  EXPECT_EQ(rows[0].N, 100000);
  EXPECT_EQ(rows.back().config, "n=N/2");
  EXPECT_EQ(rows.back().N, 20000);
}

TEST(CompareTests, MinimaxBeatsChisqAsymptotically) {
  SweepBase sweep;
  const auto rows = compare_tests(sweep, {0.1}, {{"n=N/2", 0.5}}, 200, 1);
  double minimax = 0.0, chisq = 0.0, collision = 0.0;
  for (const auto& r : rows) {
    if (r.family == TestFamily::kMinimax) minimax = r.report.asymptotic_risk;
    if (r.family == TestFamily::kChisq) chisq = r.report.asymptotic_risk;
    if (r.family == TestFamily::kCollision) collision = r.report.asymptotic_risk;
  }
  EXPECT_LT(minimax, chisq);
  EXPECT_LT(minimax, collision);
}

}  // namespace
}  // namespace uniftest
