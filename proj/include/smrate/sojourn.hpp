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

#include <string>
#include <string_view>

namespace smrate {

enum class SojournFamily { Exponential, Weibull, Gamma, Uniform };

std::string_view to_string(SojournFamily family);

/// Absolutely continuous waiting-time law on [0, inf), time in years.
///
/// Parameters by family:
///   Exponential  first = rate
///   Weibull      first = shape, second = scale
///   Gamma        first = shape, second = scale
///   Uniform      first = lower bound (>= 0), second = upper bound
class SojournDistribution {
 public:
  static SojournDistribution exponential(double rate);
  static SojournDistribution weibull(double shape, double scale);
  static SojournDistribution gamma(double shape, double scale);
  static SojournDistribution uniform(double lower, double upper);

  SojournFamily family() const noexcept { return family_; }
  double first() const noexcept { return first_; }
  double second() const noexcept { return second_; }

  double cdf(double t) const;
  /// 1 - cdf(t), evaluated without cancellation in the tail.
  double survival(double t) const;
  /// Density; at t = 0 returns the right limit (possibly +inf).
  double pdf(double t) const;
  /// Inverse cdf for p in (0, 1).
  double quantile(double p) const;
  /// Integral of the cdf over [a, b].
  double cdf_integral(double a, double b) const;
  double mean() const;

 private:
  SojournDistribution(SojournFamily family, double first, double second)
      : family_(family), first_(first), second_(second) {}

  SojournFamily family_;
  double first_;
  double second_;
};

}  // namespace smrate
