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

#include "smrate/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "smrate/error.hpp"

namespace smrate::numerics {

GaussRule gauss_from_jacobi(std::span<const double> alpha, std::span<const double> offdiag,
                            double mass) {
  const auto n = static_cast<Eigen::Index>(alpha.size());
  GaussRule rule;
  if (n == 1) {
    rule.nodes = {alpha[0]};
    rule.weights = {mass};
    return rule;
  }
  Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), n);
  Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(offdiag.data(), n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericError("gauss_from_jacobi: tridiagonal eigensolver failed");
  }
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    rule.nodes[k] = solver.eigenvalues()[k];
    const double v0 = solver.eigenvectors()(0, k);
    rule.weights[k] = mass * v0 * v0;
  }
  return rule;
}

namespace {

std::vector<GaussRule> build_legendre() {
  std::vector<GaussRule> table(kMaxTabulatedOrder + 1);
  for (int n = 1; n <= kMaxTabulatedOrder; ++n) {
    std::vector<double> alpha(n, 0.0);
    std::vector<double> off(n - 1);
    for (int k = 1; k < n; ++k) {
      off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    }
    GaussRule rule = gauss_from_jacobi(alpha, off, 1.0);
    // Map [-1, 1] to [0, 1]; weights already sum to one.
    for (auto& x : rule.nodes) x = 0.5 * (x + 1.0);
    table[n] = std::move(rule);
  }
  return table;
}

std::vector<GaussRule> build_hermite() {
  std::vector<GaussRule> table(kMaxTabulatedOrder + 1);
  for (int n = 1; n <= kMaxTabulatedOrder; ++n) {
    std::vector<double> alpha(n, 0.0);
    std::vector<double> off(n - 1);
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
    GaussRule rule = gauss_from_jacobi(alpha, off, 1.0);
    // Symmetrize to remove eigensolver round-off in the odd moments.
    for (int k = 0; k < n / 2; ++k) {
      const double x = 0.5 * (rule.nodes[n - 1 - k] - rule.nodes[k]);
      const double w = 0.5 * (rule.weights[n - 1 - k] + rule.weights[k]);
      rule.nodes[k] = -x;
      rule.nodes[n - 1 - k] = x;
      rule.weights[k] = rule.weights[n - 1 - k] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    table[n] = std::move(rule);
  }
  return table;
}

void check_order(int n) {
  if (n < 1 || n > kMaxTabulatedOrder) {
    throw ArgumentError("quadrature order out of range [1, 64]");
  }
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  check_order(n);
  static const std::vector<GaussRule> table = build_legendre();
  return table[n];
}

const GaussRule& gauss_hermite(int n) {
  check_order(n);
  static const std::vector<GaussRule> table = build_hermite();
  return table[n];
}

std::optional<GaussRule> gauss_from_moments(std::span<const long double> moments, int n) {
  if (n < 1 || static_cast<int>(moments.size()) < 2 * n + 1) {
    throw ArgumentError("gauss_from_moments: need moments mu_0..mu_{2n}");
  }
  const int size = n + 1;
  // Upper Cholesky factor of the Hankel matrix H_ij = mu_{i+j}.
  std::vector<long double> r(static_cast<std::size_t>(size * size), 0.0L);
  auto R = [&](int i, int j) -> long double& { return r[static_cast<std::size_t>(i * size + j)]; };
  for (int i = 0; i < n; ++i) {
    long double diag = moments[2 * i];
    for (int k = 0; k < i; ++k) diag -= R(k, i) * R(k, i);
    if (!(diag > 0.0L)) return std::nullopt;
    R(i, i) = std::sqrt(diag);
    for (int j = i + 1; j < size; ++j) {
      long double v = moments[i + j];
      for (int k = 0; k < i; ++k) v -= R(k, i) * R(k, j);
      R(i, j) = v / R(i, i);
    }
  }
  std::vector<double> alpha(n);
  std::vector<double> off(n > 1 ? n - 1 : 0);
  for (int j = 0; j < n; ++j) {
    long double a = R(j, j + 1) / R(j, j);
    if (j > 0) a -= R(j - 1, j) / R(j - 1, j - 1);
    alpha[j] = static_cast<double>(a);
    if (j + 1 < n) off[j] = static_cast<double>(R(j + 1, j + 1) / R(j, j));
  }
  GaussRule rule = gauss_from_jacobi(alpha, off, static_cast<double>(moments[0]));
  // Reject rules that do not reproduce the defining moments: the Hankel
  // route loses digits quickly for heavily skewed laws.
  std::vector<long double> power(rule.weights.begin(), rule.weights.end());
  for (int p = 1; p <= 2 * n - 1; ++p) {
    long double m = 0.0L;
    for (int q = 0; q < n; ++q) {
      power[q] *= static_cast<long double>(rule.nodes[q]);
      m += power[q];
    }
    const long double scale = 1.0L + std::fabs(moments[p]);
    if (std::fabs(m - moments[p]) > 1e-7L * scale) return std::nullopt;
  }
  for (double w : rule.weights) {
    if (!(w >= 0.0)) return std::nullopt;
  }
  return rule;
}

}  // namespace smrate::numerics
