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

#include <boost/random/binomial_distribution.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "uniftest/model.hpp"
#include "uniftest/poisson.hpp"
#include "uniftest/rng.hpp"

namespace uniftest {

namespace detail {

// UniformRandomBitGenerator view of a counter-based stream.
class StreamEngine {
 public:
  using result_type = std::uint64_t;
  explicit StreamEngine(rng::CoordinateStream& stream) : stream_(stream) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return stream_.next_u64(); }

 private:
  rng::CoordinateStream& stream_;
};

inline std::int64_t binomial(StreamEngine& engine, std::int64_t trials, double prob) {
  if (trials <= 0 || prob <= 0.0) return 0;
  if (prob >= 1.0) return trials;
  boost::random::binomial_distribution<std::int64_t, double> dist(trials, prob);
  return dist(engine);
}

// Histogram law of k iid Pois(rate) counts: sequential conditional
// binomials X_m ~ Bin(remaining, P(m) / P(O >= m)) for m <= M_max, then the
// remaining counts drawn one by one from the law of O given O > M_max.
class PoissonHistogramLaw {
 public:
  PoissonHistogramLaw(double rate, int M_max) : rate_(rate) {
    const auto M = static_cast<std::size_t>(M_max);
    if (rate_ == 0.0) {
      conditional_.assign(M + 1, 1.0);
      return;
    }
    const double reach = std::max<double>(M_max, rate_ + 40.0 * std::sqrt(rate_) + 40.0);
    pmf_ = poisson_pmf_table(rate_, static_cast<int>(std::ceil(reach)));
    tail_.assign(pmf_.size() + 1, 0.0);
    for (std::size_t m = pmf_.size(); m-- > 0;) tail_[m] = tail_[m + 1] + pmf_[m];
    conditional_.resize(M + 1);
    for (std::size_t m = 0; m <= M; ++m) {
      conditional_[m] = tail_[m] > 0.0 ? std::min(1.0, pmf_[m] / tail_[m]) : 1.0;
    }
  }

  void sample(StreamEngine& engine, std::int64_t count, Histogram& out,
              std::vector<std::int64_t>& counts) const {
    std::int64_t remaining = count;
    for (std::size_t m = 0; m < conditional_.size() && remaining > 0; ++m) {
      const std::int64_t x = binomial(engine, remaining, conditional_[m]);
      counts[m] += x;
      remaining -= x;
    }
    for (; remaining > 0; --remaining) out.add(overflow_value(engine));
  }

 private:
  std::int64_t overflow_value(StreamEngine& engine) const {
    const std::size_t first = conditional_.size();
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53 * tail_[first];
    double acc = 0.0;
    for (std::size_t k = first; k < pmf_.size(); ++k) {
      acc += pmf_[k];
      if (u < acc) return static_cast<std::int64_t>(k);
    }
    return static_cast<std::int64_t>(pmf_.size());
  }

  double rate_;
  std::vector<double> pmf_;
  std::vector<double> tail_;
  std::vector<double> conditional_;
};

}  // namespace detail

// Exact sampler of the histogram of one trial. The N rates are drawn from
// the model's mixture, which only matters through the component counts
// (K_0, K_+, K_-) ~ Multinomial(N; 1 - eta, eta/2, eta/2); each component
// then contributes a multinomial histogram. The cost is O(M_max) binomial
// draws per trial instead of N Poisson draws, with the same distribution as
// sample_histogram.
class HistogramSampler {
 public:
  HistogramSampler(const OccurrenceModel& model, std::int64_t N, int M_max)
      : eta_(model.eta()),
        N_(N),
        M_max_(M_max),
        laws_{detail::PoissonHistogramLaw(model.center_rate(), M_max),
              detail::PoissonHistogramLaw(model.upper_rate(), M_max),
              detail::PoissonHistogramLaw(model.lower_rate(), M_max)} {}

  // Stream reserved for histogram-level sampling of one trial.
  static constexpr std::uint64_t kStreamId = std::numeric_limits<std::uint64_t>::max();

  void sample(std::uint64_t trial_key, Histogram& out) const {
    out.clear();
    rng::CoordinateStream stream(trial_key, kStreamId);
    detail::StreamEngine engine(stream);
    const std::int64_t center = detail::binomial(engine, N_, 1.0 - eta_);
    const std::int64_t upper = detail::binomial(engine, N_ - center, 0.5);
    const std::int64_t sizes[3] = {center, upper, N_ - center - upper};
    std::vector<std::int64_t> counts(static_cast<std::size_t>(M_max_) + 1, 0);
    for (std::size_t c = 0; c < 3; ++c) laws_[c].sample(engine, sizes[c], out, counts);
    for (int m = 0; m <= M_max_; ++m) out.add_count(m, counts[static_cast<std::size_t>(m)]);
  }

 private:
  double eta_;
  std::int64_t N_;
  int M_max_;
  std::array<detail::PoissonHistogramLaw, 3> laws_;
};

}  // namespace uniftest
