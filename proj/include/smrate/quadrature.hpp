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

#include <optional>
#include <span>
#include <vector>

namespace smrate::numerics {

/// Nodes and weights of a quadrature rule. Weights of the probability rules
/// below sum to one.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline constexpr int kMaxTabulatedOrder = 64;

/// Gauss-Legendre rule on [0, 1], 1 <= n <= kMaxTabulatedOrder.
const GaussRule& gauss_legendre(int n);

/// Gauss-Hermite rule for the standard normal law (probabilists' weight).
const GaussRule& gauss_hermite(int n);

/// Gauss rule from the three-term recurrence of the orthogonal polynomials:
/// diagonal `alpha` (size n) and off-diagonal `offdiag` (size n-1, entries
/// sqrt(beta_k)). Weights are scaled to total mass `mass`.
GaussRule gauss_from_jacobi(std::span<const double> alpha, std::span<const double> offdiag,
                            double mass = 1.0);

/// n-point Gauss rule of a probability law given its raw moments
/// mu_0..mu_{2n}. Returns nullopt when the Hankel matrix is not numerically
/// positive definite or the rule fails to reproduce the input moments.
std::optional<GaussRule> gauss_from_moments(std::span<const long double> moments, int n);

/// Integral of f over [a, b] by composite Gauss-Legendre with `panels`
/// equal panels of `order` points.
template <class F>
double integrate(F&& f, double a, double b, int panels = 1, int order = 10) {
  const auto& rule = gauss_legendre(order);
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    double part = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      part += rule.weights[q] * f(lo + width * rule.nodes[q]);
    }
    total += part * width;
  }
  return total;
}

}  // namespace smrate::numerics
