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
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "uniftest/error.hpp"
#include "uniftest/poisson.hpp"
#include "uniftest/rng.hpp"

namespace uniftest {

// Parameters of one uniformity testing problem: n expected items spread
// over N categories, alternatives at l_p distance >= epsilon from uniform
// inside the hypercube of half-width xi/N.
class ProblemParams {
 public:
  static constexpr double kDefaultXi = 0.5;
  static constexpr double kDefaultMBound = 10.0;

  // Throws InvalidParams unless n > 0, N >= 2, epsilon >= 0, p in (0, 2],
  // xi in (0, 1), n/N <= M_bound and epsilon <= xi * N^(-1 + 1/p).
  // epsilon = 0 is accepted as the degenerate problem where the alternative
  // coincides with the null.
  static ProblemParams make(double n, std::int64_t N, double epsilon, double p,
                            double xi = kDefaultXi, double M_bound = kDefaultMBound,
                            std::optional<int> M_max = std::nullopt) {
    ProblemParams params(n, N, epsilon, p, xi, M_bound);
    params.validate();
    params.M_max_ = M_max ? *M_max : default_truncation(params.lambda(), xi);
    if (params.M_max_ < 1) {
      throw InvalidParams("truncation index must be >= 1");
    }
    return params;
  }

  // Largest epsilon for which the alternative set is non-empty.
  static double max_epsilon(std::int64_t N, double p, double xi) {
    return xi * std::pow(static_cast<double>(N), -1.0 + 1.0 / p);
  }

  double n() const noexcept { return n_; }
  std::int64_t N() const noexcept { return N_; }
  double epsilon() const noexcept { return epsilon_; }
  double p() const noexcept { return p_; }
  double xi() const noexcept { return xi_; }
  double M_bound() const noexcept { return M_bound_; }
  int M_max() const noexcept { return M_max_; }

  double lambda() const noexcept { return n_ / static_cast<double>(N_); }
  // Rate perturbation of the least favorable prior, epsilon * N^(-1/p).
  double perturbation() const noexcept {
    return epsilon_ * std::pow(static_cast<double>(N_), -1.0 / p_);
  }
  // Kernel argument n * epsilon * N^(-1/p).
  double kernel_argument() const noexcept { return n_ * perturbation(); }
  // Relative perturbation epsilon * N^(1 - 1/p); below xi < 1 by validation.
  double relative_perturbation() const noexcept {
    return kernel_argument() / lambda();
  }

  ProblemParams with_epsilon(double epsilon) const {
    return make(n_, N_, epsilon, p_, xi_, M_bound_, M_max_);
  }
  ProblemParams with_truncation(int M_max) const {
    return make(n_, N_, epsilon_, p_, xi_, M_bound_, M_max);
  }

  std::string describe() const {
    std::ostringstream os;
    os << "n=" << n_ << " N=" << N_ << " epsilon=" << epsilon_ << " p=" << p_
       << " xi=" << xi_ << " lambda=" << lambda() << " M_max=" << M_max_;
    return os.str();
  }

 private:
  ProblemParams(double n, std::int64_t N, double epsilon, double p, double xi,
                double M_bound)
      : n_(n), N_(N), epsilon_(epsilon), p_(p), xi_(xi), M_bound_(M_bound) {}

  void validate() const {
    auto fail = [&](const std::string& what) {
      throw InvalidParams(what + " (" + describe() + ")");
    };
    if (!(n_ > 0.0) || !std::isfinite(n_)) fail("n must be positive");
    if (N_ < 2) fail("N must be at least 2");
    if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) fail("epsilon must be >= 0");
    if (!(p_ > 0.0 && p_ <= 2.0)) fail("p must lie in (0, 2]");
    if (!(xi_ > 0.0 && xi_ < 1.0)) fail("xi must lie in (0, 1)");
    if (!(M_bound_ > 0.0)) fail("M_bound must be positive");
    if (lambda() > M_bound_) fail("lambda = n/N exceeds M_bound");
    const double limit = max_epsilon(N_, p_, xi_);
    if (epsilon_ > limit * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "alternative set is empty: epsilon > xi * N^(-1+1/p) = " << limit;
      fail(os.str());
    }
  }

  double n_;
  std::int64_t N_;
  double epsilon_;
  double p_;
  double xi_;
  double M_bound_;
  int M_max_ = kTruncationFloor;
};

// Histogram (fingerprint) of an occurrence vector: counts[m] categories were
// seen exactly m times for m <= M_max. Larger occurrences are kept verbatim
// in overflow_values so that weights defined for every m can still be
// applied exactly.
class Histogram {
 public:
  explicit Histogram(int M_max) : counts_(static_cast<std::size_t>(M_max) + 1, 0) {
    if (M_max < 0) throw InvalidInput("Histogram: M_max must be >= 0");
  }

  void add(std::int64_t occurrence) {
    if (occurrence <= M_max()) {
      ++counts_[static_cast<std::size_t>(occurrence)];
    } else {
      overflow_values_.push_back(occurrence);
    }
  }

  void add_count(int m, std::int64_t count) {
    if (m < 0 || m > M_max() || count < 0) throw InvalidInput("Histogram::add_count: bad bin");
    counts_[static_cast<std::size_t>(m)] += count;
  }

  void clear() noexcept {
    std::fill(counts_.begin(), counts_.end(), 0);
    overflow_values_.clear();
  }

  int M_max() const noexcept { return static_cast<int>(counts_.size()) - 1; }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }
  std::int64_t count(int m) const { return counts_.at(static_cast<std::size_t>(m)); }
  std::span<const std::int64_t> overflow_values() const noexcept { return overflow_values_; }
  std::int64_t overflow() const noexcept {
    return static_cast<std::int64_t>(overflow_values_.size());
  }
  std::int64_t N() const noexcept {
    std::int64_t total = overflow();
    for (auto c : counts_) total += c;
    return total;
  }

  // Histogram of the concatenation of two disjoint category blocks.
  Histogram merged(const Histogram& other) const {
    if (other.M_max() != M_max()) {
      throw InvalidInput("Histogram::merged: truncation indices differ");
    }
    Histogram out = *this;
    for (std::size_t m = 0; m < counts_.size(); ++m) out.counts_[m] += other.counts_[m];
    out.overflow_values_.insert(out.overflow_values_.end(),
                                other.overflow_values_.begin(),
                                other.overflow_values_.end());
    return out;
  }

  friend bool operator==(const Histogram&, const Histogram&) = default;

 private:
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> overflow_values_;
};

inline Histogram build_histogram(std::span<const std::int64_t> occurrences, int M_max) {
  Histogram hist(M_max);
  for (std::size_t i = 0; i < occurrences.size(); ++i) {
    if (occurrences[i] < 0) {
      throw InvalidInput("build_histogram: negative occurrence at index " +
                         std::to_string(i));
    }
    hist.add(occurrences[i]);
  }
  return hist;
}

// Symmetric three-point prior on each rate Q_i: 1/N with probability 1 - eta,
// 1/N + mu and 1/N - mu with probability eta/2 each (two-point when eta = 1).
struct PriorSpec {
  double eta = 1.0;
  double mu = 0.0;

  static PriorSpec least_favorable(const ProblemParams& params) {
    return PriorSpec{1.0, params.perturbation()};
  }

  double center(const ProblemParams& params) const noexcept {
    return 1.0 / static_cast<double>(params.N());
  }

  // Expected sum over coordinates of |Q_i - 1/N|^p.
  double expected_lp_mass(const ProblemParams& params) const {
    return eta * static_cast<double>(params.N()) * std::pow(mu, params.p());
  }

  // Throws InvalidPrior unless eta in (0, 1], mu >= 0, the lower rate
  // 1/N - mu is non-negative and mu <= xi/N. With require_membership the
  // prior must also satisfy eta * N * mu^p >= epsilon^p.
  void validate(const ProblemParams& params, bool require_membership = false) const {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidPrior("prior eta must lie in (0, 1]");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidPrior("prior mu must be >= 0");
    const double N = static_cast<double>(params.N());
    if (1.0 / N - mu < 0.0) {
      throw InvalidPrior("prior produces a negative Poisson rate: 1/N - mu < 0");
    }
    if (mu > params.xi() / N * (1.0 + 1e-12)) {
      throw InvalidPrior("prior perturbation mu exceeds the hypercube half-width xi/N");
    }
    if (require_membership) {
      const double target = std::pow(params.epsilon(), params.p());
      if (expected_lp_mass(params) < target * (1.0 - 1e-12)) {
        throw InvalidPrior("prior violates eta * N * mu^p >= epsilon^p");
      }
    }
  }
};

// Per-coordinate law of the occurrence count O_i: a Poisson variate whose
// rate n * Q_i is drawn from the three-point prior (or fixed at lambda under
// the null).
class OccurrenceModel {
 public:
  static OccurrenceModel null_model(const ProblemParams& params) {
    return OccurrenceModel(params.lambda(), 0.0, 0.0);
  }

  static OccurrenceModel from_prior(const ProblemParams& params, const PriorSpec& prior) {
    prior.validate(params);
    return OccurrenceModel(params.lambda(), prior.eta, params.n() * prior.mu);
  }

  // -1, 0 or +1: which support point the coordinate's rate is drawn from.
  int component(const rng::CoordinateStream& stream) const noexcept {
    if (eta_ == 0.0) return 0;
    const double u = stream.side_uniform();
    if (u >= eta_) return 0;
    return u < 0.5 * eta_ ? 1 : -1;
  }

  std::int64_t draw(rng::CoordinateStream& stream) const {
    switch (component(stream)) {
      case 1:
        return upper_(stream);
      case -1:
        return lower_(stream);
      default:
        return center_(stream);
    }
  }

  double rate_shift() const noexcept { return shift_; }
  double eta() const noexcept { return eta_; }
  double center_rate() const noexcept { return center_.rate(); }
  double upper_rate() const noexcept { return upper_.rate(); }
  double lower_rate() const noexcept { return lower_.rate(); }

 private:
  OccurrenceModel(double lambda, double eta, double shift)
      : eta_(eta),
        shift_(shift),
        center_(lambda),
        upper_(lambda + shift),
        lower_(std::max(0.0, lambda - shift)) {}

  double eta_;
  double shift_;
  PoissonSampler center_;
  PoissonSampler upper_;
  PoissonSampler lower_;
};

// Calls visit(i, O_i) for every category of one trial. Each coordinate owns
// a counter-based substream keyed by (trial key, i), so the output does not
// depend on evaluation order.
template <class Visitor>
void for_each_occurrence(const OccurrenceModel& model, std::uint64_t key,
                         std::int64_t N, Visitor&& visit) {
  for (std::int64_t i = 0; i < N; ++i) {
    rng::CoordinateStream stream(key, static_cast<std::uint64_t>(i));
    visit(i, model.draw(stream));
  }
}

// Samples one trial of the given arm straight into a histogram; the
// occurrence vector itself is never materialized.
inline void sample_histogram(const OccurrenceModel& model, std::uint64_t key,
                             std::int64_t N, Histogram& out) {
  out.clear();
  for_each_occurrence(model, key, N, [&](std::int64_t, std::int64_t o) { out.add(o); });
}

inline std::vector<std::int64_t> sample_occurrences(const OccurrenceModel& model,
                                                    std::uint64_t key, std::int64_t N) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(N));
  for_each_occurrence(model, key, N, [&](std::int64_t i, std::int64_t o) {
    out[static_cast<std::size_t>(i)] = o;
  });
  return out;
}

// N iid Pois(lambda) occurrences, a pure function of (params, seed, trial).
inline std::vector<std::int64_t> sample_null(const ProblemParams& params, std::uint64_t seed,
                                             std::uint64_t trial = 0) {
  return sample_occurrences(OccurrenceModel::null_model(params),
                            rng::trial_key(seed, trial, rng::Arm::kNull), params.N());
}

// Occurrences under a fresh rate vector Q drawn from the prior.
inline std::vector<std::int64_t> sample_prior(const ProblemParams& params,
                                              const PriorSpec& prior, std::uint64_t seed,
                                              std::uint64_t trial = 0) {
  return sample_occurrences(OccurrenceModel::from_prior(params, prior),
                            rng::trial_key(seed, trial, rng::Arm::kAlternative),
                            params.N());
}

// The rate vector Q realized by sample_prior for the same (seed, trial).
inline std::vector<double> sample_prior_rates(const ProblemParams& params,
                                              const PriorSpec& prior, std::uint64_t seed,
                                              std::uint64_t trial = 0) {
  const auto model = OccurrenceModel::from_prior(params, prior);
  const std::uint64_t key = rng::trial_key(seed, trial, rng::Arm::kAlternative);
  const double center = prior.center(params);
  std::vector<double> rates(static_cast<std::size_t>(params.N()));
  for (std::int64_t i = 0; i < params.N(); ++i) {
    const rng::CoordinateStream stream(key, static_cast<std::uint64_t>(i));
    rates[static_cast<std::size_t>(i)] = center + model.component(stream) * prior.mu;
  }
  return rates;
}

// Weights w_0..w_{M_max} of a linear histogram statistic. Categories whose
// count exceeds M_max are weighted by the optional closed-form extension, or
// by w_{M_max} when none is given.
class WeightSequence {
 public:
  using Extension = std::function<double(std::int64_t)>;

  explicit WeightSequence(std::vector<double> values, Extension extension = {})
      : values_(std::move(values)), extension_(std::move(extension)) {
    if (values_.empty()) throw InvalidInput("WeightSequence: no weights");
    for (std::size_t m = 0; m < values_.size(); ++m) {
      if (!std::isfinite(values_[m])) {
        throw InvalidInput("WeightSequence: non-finite weight at m=" + std::to_string(m));
      }
      if (values_[m] != 0.0) {
        growth_C_ = std::max(growth_C_, std::log(std::fabs(values_[m])) /
                                            static_cast<double>(m + 1));
      }
    }
  }

  int M_max() const noexcept { return static_cast<int>(values_.size()) - 1; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](int m) const { return values_[static_cast<std::size_t>(m)]; }

  double at(std::int64_t m) const {
    if (m <= M_max()) return values_[static_cast<std::size_t>(m)];
    return extension_ ? extension_(m) : values_.back();
  }

  // Smallest C >= 0 with |w_m| <= exp(C (m + 1)) on the stored range.
  double growth_C() const noexcept { return growth_C_; }

  bool is_constant() const noexcept {
    return std::all_of(values_.begin(), values_.end(),
                       [&](double w) { return w == values_.front(); });
  }

  // a * w + c, applied to the extension as well.
  WeightSequence affine(double a, double c) const {
    std::vector<double> scaled(values_.size());
    std::transform(values_.begin(), values_.end(), scaled.begin(),
                   [&](double w) { return a * w + c; });
    Extension ext;
    if (extension_) {
      ext = [inner = extension_, a, c](std::int64_t m) { return a * inner(m) + c; };
    }
    return WeightSequence(std::move(scaled), std::move(ext));
  }

 private:
  std::vector<double> values_;
  Extension extension_;
  double growth_C_ = 0.0;
};

}  // namespace uniftest
