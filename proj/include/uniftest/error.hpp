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

#include <stdexcept>
#include <string>

namespace uniftest {

// Base class for every error raised by the library. The CLI maps
// ValidationError subclasses to exit status 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Problem parameters outside the admissible region (empty alternative,
// non-positive n, N < 2, ...).
class InvalidParams : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed data handed to an operation (negative occurrence counts, empty
// grids, mismatched truncation).
class InvalidInput : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Prior whose support leaves the admissible rate region.
class InvalidPrior : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Weight sequence with zero null variance (constant up to the null space of
// the covariance).
class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

// Inconsistent verification configuration (e.g. a grid without feasible
// points).
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace uniftest
