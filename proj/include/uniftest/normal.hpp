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
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "uniftest/error.hpp"

namespace uniftest {

// Standard normal CDF. std::erfc keeps full relative accuracy in the lower
// tail, which the asymptotic risk 2*Phi(-u/2) lives in.
inline double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Inverse of normal_cdf on [0, 1]; returns -inf/+inf at the endpoints.
inline double normal_quantile(double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw DomainError("normal_quantile: probability outside [0, 1]");
  }
  if (prob == 0.0) return -std::numeric_limits<double>::infinity();
  if (prob == 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * prob);
}

}  // namespace uniftest
