/*
 * Copyright 2026 The smrate Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace smrate {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid index, parameter or precondition supplied by the caller.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure produced an unusable result. Base for the more
/// specific numeric failures below; the CLI maps all of them to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Volterra march drifted off row-stochasticity.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, double max_drift)
      : NumericError(what), max_drift_(max_drift) {}
  double max_drift() const noexcept { return max_drift_; }

 private:
  double max_drift_;
};

/// Conditioning on an event of (numerically) zero probability, e.g. H_i(u) = 1.
class DegenerateConditioningError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Inverse-cdf root finding could not bracket or converge.
class RootFindingError : public NumericError {
 public:
  RootFindingError(const std::string& what, double lo, double hi)
      : NumericError(what), lo_(lo), hi_(hi) {}
  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Quadrature nodes or a query fell outside the rate lattice.
class GridCoverageError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// The regime model does not provide the requested quantity.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration. The message names
/// the offending field (e.g. "kernel.embedded[1]").
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A solver was handed an incompatible or missing input surface.
class DependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace smrate
