// Copyright 2026 The gpcd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GPCD_ERRORS_HPP_
#define GPCD_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gpcd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector/matrix dimensions or out-of-range indices.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A Cholesky factorization failed even at the maximum jitter, or a mass
/// matrix is singular.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Least-squares regressor without enough excitation to identify the weights.
class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// Training data lacks a regime the estimator needs (e.g. no quasi-static
/// samples for the gated kernel).
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// The simulated state became NaN/inf.
class NonFiniteStateError : public Error {
 public:
  using Error::Error;
};

/// A Cartesian target lies outside the reachable workspace.
class UnreachableTargetError : public Error {
 public:
  UnreachableTargetError(const std::string& what, double x, double y)
      : Error(what), x_(x), y_(y) {}
  double x() const { return x_; }
  double y() const { return y_; }

 private:
  double x_;
  double y_;
};

/// Malformed or incompatible file contents (CSV, model files, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A model file was written by an incompatible format version.
class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Hyperparameter optimization diverged.
class OptimizationError : public Error {
 public:
  using Error::Error;
};

}  // namespace gpcd

#endif  // GPCD_ERRORS_HPP_
