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
#include <cstdint>

#include "uniftest/kernels.hpp"
#include "uniftest/model.hpp"

namespace uniftest {
namespace {

// High-precision references (tests/oracles/reference_values.py).
constexpr double kH01Half = -0.39346934028736658;
constexpr double kH21MinusHalf = -0.58781968232496796;
constexpr double kG01Half = 0.12762596520638079;
constexpr double kG21Half = -0.11156284898577138;
constexpr double kG21Tenth = -0.0049791402676071702;
constexpr double kG01Hundredth = 5.0000416668055558e-5;
constexpr double kG5Small = 356.70118806782350;      // m=5, lambda=0.1, x=0.3
constexpr double kG3Tiny = -2.4999999999995833e-13;  // m=3, lambda=2, x=1e-6
constexpr double kG40 = 600.67367252410519;          // m=40, lambda=1, x=0.2
constexpr double kDelta2 = -9.1586166958077577;      // lambda=1, N=1e4, x=0.1

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

TEST(HKernel, ReferenceValues) {
  EXPECT_LT(rel(h_kernel(0, 1.0, 0.5), kH01Half), 1e-14);
  EXPECT_LT(rel(h_kernel(2, 1.0, -0.5), kH21MinusHalf), 1e-14);
  for (std::int64_t m : {0, 1, 5, 30}) {
    for (double lambda : {0.1, 1.0, 7.0}) EXPECT_EQ(h_kernel(m, lambda, 0.0), 0.0);
  }
}

TEST(HKernel, SignAwareBeyondMinusLambda) {
  // 1 + x/lambda = -1: (-1)^m e^{2} - 1.
  EXPECT_NEAR(h_kernel(3, 1.0, -2.0), -std::exp(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(h_kernel(4, 1.0, -2.0), std::exp(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(h_kernel(0, 1.0, -1.0), std::exp(1.0) - 1.0, 1e-12);
  EXPECT_EQ(h_kernel(2, 1.0, -1.0), -1.0);
  EXPECT_THROW(h_kernel(-1, 1.0, 0.1), DomainError);
  EXPECT_THROW(h_kernel(1, 0.0, 0.1), DomainError);
}

TEST(GKernel, ReferenceValues) {
  EXPECT_LT(rel(g_kernel(0, 1.0, 0.5), kG01Half), 1e-14);
  EXPECT_LT(rel(g_kernel(2, 1.0, 0.5), kG21Half), 1e-14);
  EXPECT_LT(rel(g_kernel(2, 1.0, 0.1), kG21Tenth), 1e-13);
  EXPECT_LT(rel(g_kernel(0, 1.0, 0.01), kG01Hundredth), 1e-13);
  EXPECT_LT(rel(g_kernel(5, 0.1, 0.3), kG5Small), 1e-13);
  EXPECT_LT(rel(g_kernel(3, 2.0, 1e-6), kG3Tiny), 1e-9);
  EXPECT_LT(rel(g_kernel(40, 1.0, 0.2), kG40), 1e-13);
}

TEST(GKernel, AverageOfShiftedKernels) {
  const double expected = 0.5 * (h_kernel(2, 1.0, 0.5) + h_kernel(2, 1.0, -0.5));
  EXPECT_NEAR(g_kernel(2, 1.0, 0.5), expected, 1e-15);
  EXPECT_NEAR(h_kernel(2, 1.0, 0.5), 2.25 * std::exp(-0.5) - 1.0, 1e-15);
}

TEST(GKernel, ExactlyEven) {
  for (std::int64_t m = 0; m <= 30; ++m) {
    for (double lambda : {0.1, 1.0, 5.0}) {
      for (double x : {1e-8, 1e-3, 0.05, 0.3, 2.5}) {
        EXPECT_EQ(g_kernel(m, lambda, x), g_kernel(m, lambda, -x));
      }
      EXPECT_EQ(g_kernel(m, lambda, 0.0), 0.0);
    }
  }
}

TEST(GKernel, NoCancellationNearZero) {
  // g ~ (x^2 / 2 lambda^2) * coefficient for tiny x, to full precision.
  for (std::int64_t m = 0; m <= 8; ++m) {
    const double x = 1e-7;
    const double coef = g_quadratic_coefficient(m, 1.0);
    EXPECT_NEAR(g_kernel(m, 1.0, x) / (0.5 * x * x * coef), 1.0, 1e-6) << m;
  }
}

TEST(GQuadratic, Coefficients) {
  EXPECT_EQ(g_quadratic_coefficient(2, 1.0), -1.0);
  EXPECT_EQ(g_quadratic_coefficient(1, 1.0), -1.0);
  EXPECT_EQ(g_quadratic_coefficient(3, 1.0), 1.0);
  EXPECT_EQ(g_quadratic_coefficient(1, 2.0), 0.0);
  EXPECT_EQ(g_quadratic_approx(2, 1.0, 0.5), -0.125);
  EXPECT_EQ(g_quadratic_approx(4, 3.0, 0.0), 0.0);
}

TEST(GQuadratic, ApproximationQuality) {
  // Large x: about 11% off.
  EXPECT_NEAR(rel(g_quadratic_approx(2, 1.0, 0.5), kG21Half), 0.1204, 1e-3);
  EXPECT_NEAR(g_quadratic_approx(0, 1.0, 0.01), 5e-5, 1e-18);
  EXPECT_LT(rel(g_quadratic_approx(0, 1.0, 0.01), kG01Hundredth), 1e-5);
  EXPECT_LT(rel(g_quadratic_approx(2, 1.0, 0.01), g_kernel(2, 1.0, 0.01)), 1e-3);
  for (std::int64_t m = 2; m <= 10; ++m) {
    for (double x : {-0.1, -0.03, 0.001, 0.02, 0.1}) {
      EXPECT_LT(rel(g_kernel(m, 1.0, x), g_quadratic_approx(m, 1.0, x)), 0.05) << m << " " << x;
    }
  }
  // Where the coefficient vanishes the kernel is fourth order.
  EXPECT_LT(std::fabs(g_kernel(1, 2.0, 0.05)), 1e-6);
}

TEST(KernelIdentity, VanishesOnGrid) {
  for (double lambda : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    for (double x : {-0.5 * lambda, -0.1, -0.01, 0.0, 0.01, 0.1, 0.5 * lambda}) {
      const int M = identity_truncation(lambda, x);
      EXPECT_LT(std::fabs(kernel_identity_sum(lambda, x, M)), 1e-10) << lambda << " " << x;
    }
  }
  EXPECT_EQ(kernel_identity_sum(1.0, 0.0, 20), 0.0);
  // Forced short truncation leaves a visible residual.
  EXPECT_GT(std::fabs(kernel_identity_sum(5.0, 0.3, 3)), 1e-4);
}

TEST(KernelIdentity, TailBoundCoversTruncation) {
  for (int M : {2, 4, 8, 12}) {
    const double residual = std::fabs(kernel_identity_sum(3.0, 0.4, M));
    EXPECT_LE(residual, g_tail_bound(3.0, 0.4, M)) << M;
  }
}

TEST(DeltaStar, ClosedForm) {
  const auto params = ProblemParams::make(10000, 10000, 0.1, 1.0);
  const auto delta = delta_star(params);
  ASSERT_EQ(delta.M_max(), params.M_max());
  EXPECT_LT(rel(delta.values[2], kDelta2), 1e-13);
  EXPECT_LE(std::fabs(delta.sum()), delta.tail_mass);
  EXPECT_LT(delta.tail_mass, 1e-6);
  for (int m = 0; m <= delta.M_max(); ++m) {
    EXPECT_NEAR(delta.values[m], 10000 * poisson_pmf(1.0, m) * g_kernel(m, 1.0, 0.1),
                1e-12 * std::fabs(delta.values[m]) + 1e-300);
  }
}

TEST(DeltaStar, ZeroEpsilon) {
  const auto delta = delta_star(ProblemParams::make(10000, 10000, 0.0, 1.0));
  for (double v : delta.values) EXPECT_EQ(v, 0.0);
}

TEST(DeltaOfPrior, SpecializesAndScales) {
  const auto params = ProblemParams::make(5000, 10000, 0.2, 1.0);
  const auto star = delta_star(params);
  const auto same = delta_of_prior(params, PriorSpec{1.0, params.perturbation()});
  const auto half = delta_of_prior(params, PriorSpec{0.5, params.perturbation()});
  for (int m = 0; m <= star.M_max(); ++m) {
    EXPECT_EQ(same.values[m], star.values[m]);
    EXPECT_EQ(half.values[m], 0.5 * star.values[m]);
  }
  for (double eta : {0.1, 0.7, 1.0}) {
    for (double frac : {0.1, 0.5, 1.0}) {
      const auto d = delta_of_prior(params, PriorSpec{eta, frac * 0.5 / 10000});
      EXPECT_LE(std::fabs(d.sum()), d.tail_mass) << eta << " " << frac;
    }
  }
}

TEST(DeltaStar, TailMassWithForcedTruncation) {
  const auto params = ProblemParams::make(50000, 10000, 0.3, 1.0).with_truncation(3);
  const auto delta = delta_star(params);
  EXPECT_GT(std::fabs(delta.sum()), 1e-3);
  EXPECT_LE(std::fabs(delta.sum()), delta.tail_mass);
}

}  // namespace
}  // namespace uniftest
