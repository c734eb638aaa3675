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

// Counter-based random streams.
//
// Every random quantity in the library is a pure function of
// (seed, trial, arm, coordinate, draw index). Streams are derived by hashing
// with the SplitMix64 finalizer, so any subset of trials or coordinates can be
// generated in any order, on any number of threads, with bit-identical
// results.

#include <cstdint>

namespace uniftest::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class Arm : std::uint64_t { kNull = 0, kAlternative = 1 };

// Key of the substream owned by one Monte-Carlo trial of one arm.
constexpr std::uint64_t trial_key(std::uint64_t seed, std::uint64_t trial,
                                  Arm arm) noexcept {
  std::uint64_t k = mix64(seed + kGolden);
  k = mix64(k ^ (trial * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  return mix64(k ^ (static_cast<std::uint64_t>(arm) + 1) * 0xA0761D6478BD642FULL);
}

// Random stream attached to one coordinate of one trial. Draw j is
// mix64(key + (j + 1) * golden), i.e. the j-th SplitMix64 output.
class CoordinateStream {
 public:
  constexpr CoordinateStream(std::uint64_t trial_key,
                             std::uint64_t coordinate) noexcept
      : key_(mix64(trial_key + (coordinate + 1) * 0xE7037ED1A0B428DBULL)) {}

  constexpr std::uint64_t next_u64() noexcept {
    counter_ += kGolden;
    return mix64(key_ + counter_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  constexpr double next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Independent side channel (used for prior component selection) that does
  // not consume draws from the main sequence.
  constexpr double side_uniform() const noexcept {
    return static_cast<double>(mix64(key_ ^ 0x5851F42D4C957F2DULL) >> 11) *
           0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace uniftest::rng
