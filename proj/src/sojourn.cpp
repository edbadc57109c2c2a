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

#include "smrate/sojourn.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "smrate/error.hpp"
#include "smrate/quadrature.hpp"

namespace smrate {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string_view to_string(SojournFamily family) {
  switch (family) {
    case SojournFamily::Exponential: return "exponential";
    case SojournFamily::Weibull: return "weibull";
    case SojournFamily::Gamma: return "gamma";
    case SojournFamily::Uniform: return "uniform";
  }
  return "unknown";
}

SojournDistribution SojournDistribution::exponential(double rate) {
  if (!positive_finite(rate)) throw ArgumentError("exponential sojourn: rate must be > 0");
  return {SojournFamily::Exponential, rate, 0.0};
}

SojournDistribution SojournDistribution::weibull(double shape, double scale) {
  if (!positive_finite(shape) || !positive_finite(scale)) {
    throw ArgumentError("weibull sojourn: shape and scale must be > 0");
  }
  return {SojournFamily::Weibull, shape, scale};
}

SojournDistribution SojournDistribution::gamma(double shape, double scale) {
  if (!positive_finite(shape) || !positive_finite(scale)) {
    throw ArgumentError("gamma sojourn: shape and scale must be > 0");
  }
  return {SojournFamily::Gamma, shape, scale};
}

SojournDistribution SojournDistribution::uniform(double lower, double upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || lower < 0.0 || upper <= lower) {
    throw ArgumentError("uniform sojourn: need 0 <= lower < upper");
  }
  return {SojournFamily::Uniform, lower, upper};
}

double SojournDistribution::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case SojournFamily::Exponential: return -std::expm1(-first_ * t);
    case SojournFamily::Weibull: return -std::expm1(-std::pow(t / second_, first_));
    case SojournFamily::Gamma: return boost::math::gamma_p(first_, t / second_);
    case SojournFamily::Uniform:
      if (t <= first_) return 0.0;
      if (t >= second_) return 1.0;
      return (t - first_) / (second_ - first_);
  }
  return 0.0;
}

double SojournDistribution::survival(double t) const {
  if (t <= 0.0) return 1.0;
  switch (family_) {
    case SojournFamily::Exponential: return std::exp(-first_ * t);
    case SojournFamily::Weibull: return std::exp(-std::pow(t / second_, first_));
    case SojournFamily::Gamma: return boost::math::gamma_q(first_, t / second_);
    case SojournFamily::Uniform: return 1.0 - cdf(t);
  }
  return 1.0;
}

double SojournDistribution::pdf(double t) const {
  if (t < 0.0) return 0.0;
  switch (family_) {
    case SojournFamily::Exponential: return first_ * std::exp(-first_ * t);
    case SojournFamily::Weibull: {
      const double k = first_;
      const double lambda = second_;
      if (t == 0.0) return k < 1.0 ? kInf : (k == 1.0 ? 1.0 / lambda : 0.0);
      const double z = t / lambda;
      return k / lambda * std::pow(z, k - 1.0) * std::exp(-std::pow(z, k));
    }
    case SojournFamily::Gamma: {
      if (t == 0.0) return first_ < 1.0 ? kInf : (first_ == 1.0 ? 1.0 / second_ : 0.0);
      return boost::math::gamma_p_derivative(first_, t / second_) / second_;
    }
    case SojournFamily::Uniform:
      return (t >= first_ && t <= second_) ? 1.0 / (second_ - first_) : 0.0;
  }
  return 0.0;
}

double SojournDistribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("sojourn quantile: p must lie in (0, 1)");
  switch (family_) {
    case SojournFamily::Exponential: return -std::log1p(-p) / first_;
    case SojournFamily::Weibull: return second_ * std::pow(-std::log1p(-p), 1.0 / first_);
    case SojournFamily::Gamma: return second_ * boost::math::gamma_p_inv(first_, p);
    case SojournFamily::Uniform: return first_ + p * (second_ - first_);
  }
  return 0.0;
}

double SojournDistribution::cdf_integral(double a, double b) const {
  if (b <= a) return 0.0;
  switch (family_) {
    case SojournFamily::Exponential: {
      const double lo = std::max(a, 0.0);
      if (b <= 0.0) return 0.0;
      // int (1 - e^{-rt}) dt = (b - lo) - (e^{-r lo} - e^{-r b}) / r
      return (b - lo) - std::exp(-first_ * lo) * (-std::expm1(-first_ * (b - lo))) / first_;
    }
    case SojournFamily::Uniform: {
      // cdf is piecewise linear: integrate exactly on each linear piece.
      double total = 0.0;
      const double cuts[] = {a, std::clamp(first_, a, b), std::clamp(second_, a, b), b};
      for (int k = 0; k < 3; ++k) {
        const double lo = cuts[k];
        const double hi = cuts[k + 1];
        if (hi > lo) total += 0.5 * (cdf(lo) + cdf(hi)) * (hi - lo);
      }
      return total;
    }
    case SojournFamily::Weibull:
    case SojournFamily::Gamma:
      return numerics::integrate([this](double t) { return cdf(t); }, a, b, 2, 16);
  }
  return 0.0;
}

double SojournDistribution::mean() const {
  switch (family_) {
    case SojournFamily::Exponential: return 1.0 / first_;
    case SojournFamily::Weibull: return second_ * std::tgamma(1.0 + 1.0 / first_);
    case SojournFamily::Gamma: return first_ * second_;
    case SojournFamily::Uniform: return 0.5 * (first_ + second_);
  }
  return 0.0;
}

}  // namespace smrate
