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

#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "smrate/error.hpp"
#include "smrate/rate_models.hpp"
#include "smrate/rng.hpp"

namespace smrate {
namespace {

constexpr oracle::Vasicek kVas{0.5, 0.04, 0.02};
constexpr oracle::Cir kCir{0.04, 1.0, 0.1};

RateModel vasicek() { return RateModel::vasicek({{kVas.a, kVas.b, kVas.sigma}}); }
RateModel cir() { return RateModel::cir({{kCir.a, kCir.b, kCir.sigma}}); }

void expect_rel(double got, double want, double rel) {
  EXPECT_NEAR(got, want, rel * std::max(1e-300, std::fabs(want))) << "want " << want;
}

TEST(Vasicek, MomentsMatchClosedForms) {
  const auto m = vasicek();
  for (double x : {-0.01, 0.03, 0.1}) {
    for (double t : {0.01, 0.5, 2.0, 5.0}) {
      expect_rel(transition_mean(m, 0, x, t), kVas.mean(x, t), 1e-13);
      expect_rel(transition_variance(m, 0, x, t), kVas.variance(t), 1e-12);
      expect_rel(integrated_mean(m, 0, x, t), kVas.integral_mean(x, t), 1e-12);
      expect_rel(integrated_variance(m, 0, x, t), kVas.integral_variance(t), 1e-9);
      for (int n = 1; n <= 3; ++n) expect_rel(bond_laplace(m, 0, x, n, t), kVas.bond(x, n, t), 1e-12);
      expect_rel(product_mean(m, 0, x, t, 0.7), kVas.product(x, t, 0.7), 1e-12);
    }
  }
}

TEST(Vasicek, SlowReversionApproachesBrownianLimits) {
  const auto m = RateModel::vasicek({{1e-7, 0.05, 0.02}});
  const double t = 3.0;
  expect_rel(integrated_variance(m, 0, 0.03, t), 0.02 * 0.02 * t * t * t / 3.0, 1e-6);
  expect_rel(transition_variance(m, 0, 0.03, t), 0.02 * 0.02 * t, 1e-6);
}

TEST(Vasicek, TiltShiftsMeanByCrossCovariance) {
  const auto& reg = vasicek().regime(0);
  const double t = 1.3;
  const double x = 0.02;
  const double cross = kVas.sigma * kVas.sigma / (2 * kVas.a * kVas.a) *
                       std::pow(1.0 - std::exp(-kVas.a * t), 2);
  for (int n : {1, 2, 3}) {
    const auto law = reg.law(x, t, n);
    EXPECT_EQ(law.shape, TransitionLaw::Shape::Gaussian);
    expect_rel(law.mean, kVas.mean(x, t) - n * cross, 1e-12);
    expect_rel(law.variance, kVas.variance(t), 1e-12);
  }
}

TEST(Vasicek, RejectsBadParameters) {
  EXPECT_THROW(RateModel::vasicek({{0.0, 0.05, 0.02}}), ArgumentError);
  EXPECT_THROW(RateModel::vasicek({{1.0, 0.05, -0.02}}), ArgumentError);
  EXPECT_THROW(RateModel::vasicek({}), ArgumentError);
}

TEST(HullWhite, ConstantTablesReduceToVasicek) {
  const double T = 10.0;
  const auto hw = RateModel::hull_white({{PiecewiseLinear::constant(kVas.a * kVas.b, T),
                                          PiecewiseLinear::constant(kVas.a, T),
                                          PiecewiseLinear::constant(kVas.sigma, T)}});
  const auto v = vasicek();
  for (double t : {0.1, 1.0, 4.0}) {
    EXPECT_NEAR(transition_mean(hw, 0, 0.03, t), transition_mean(v, 0, 0.03, t), 1e-12);
    EXPECT_NEAR(transition_variance(hw, 0, 0.03, t), transition_variance(v, 0, 0.03, t), 1e-12);
    EXPECT_NEAR(integrated_variance(hw, 0, 0.03, t), integrated_variance(v, 0, 0.03, t), 1e-12);
    EXPECT_NEAR(bond_laplace(hw, 0, 0.03, 2, t), bond_laplace(v, 0, 0.03, 2, t), 1e-11);
    EXPECT_NEAR(product_mean(hw, 0, 0.03, t, 0.5), product_mean(v, 0, 0.03, t, 0.5), 1e-12);
  }
}

// Mean, variance, integrated mean, integrated variance and Cov(int r, r)
// obey a linear ODE system; RK4 with a fine step gives an independent
// reference for time-varying tables.
std::array<double, 5> hull_white_reference(const HullWhiteParams& p, double x, double T) {
  std::array<double, 5> y{x, 0.0, 0.0, 0.0, 0.0};
  auto f = [&](double t, const std::array<double, 5>& s) {
    const double b = p.beta(t);
    const double sg = p.sigma(t);
    return std::array<double, 5>{p.alpha(t) - b * s[0], -2 * b * s[1] + sg * sg, s[0],
                                 2 * s[4], s[1] - b * s[4]};
  };
  const int steps = 20000;
  const double h = T / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    auto add = [](std::array<double, 5> a, const std::array<double, 5>& b, double c) {
      for (int q = 0; q < 5; ++q) a[q] += c * b[q];
      return a;
    };
    const auto k1 = f(t, y);
    const auto k2 = f(t + h / 2, add(y, k1, h / 2));
    const auto k3 = f(t + h / 2, add(y, k2, h / 2));
    const auto k4 = f(t + h, add(y, k3, h));
    for (int q = 0; q < 5; ++q) y[q] += h / 6 * (k1[q] + 2 * k2[q] + 2 * k3[q] + k4[q]);
  }
  return y;
}

TEST(HullWhite, TimeVaryingMomentsMatchOdeReference) {
  const HullWhiteParams p{PiecewiseLinear({{0, 0.02}, {1, 0.05}, {3, 0.01}, {6, 0.01}}),
                          PiecewiseLinear({{0, 0.8}, {2, 0.3}, {6, 0.3}}),
                          PiecewiseLinear({{0, 0.01}, {1.5, 0.03}, {6, 0.02}})};
  const auto m = RateModel::hull_white({p});
  for (double T : {0.7, 2.5, 5.0}) {
    const auto ref = hull_white_reference(p, 0.03, T);
    EXPECT_NEAR(transition_mean(m, 0, 0.03, T), ref[0], 1e-10);
    EXPECT_NEAR(transition_variance(m, 0, 0.03, T), ref[1], 1e-10);
    EXPECT_NEAR(integrated_mean(m, 0, 0.03, T), ref[2], 1e-10);
    EXPECT_NEAR(integrated_variance(m, 0, 0.03, T), ref[3], 1e-10);
    EXPECT_NEAR(bond_laplace(m, 0, 0.03, 1, T), std::exp(-ref[2] + 0.5 * ref[3]), 1e-10);
  }
}

TEST(HullWhite, RejectsTimesBeyondTables) {
  const auto m = RateModel::hull_white({{PiecewiseLinear::constant(0.02, 2.0),
                                         PiecewiseLinear::constant(0.5, 2.0),
                                         PiecewiseLinear::constant(0.01, 2.0)}});
  EXPECT_THROW(transition_mean(m, 0, 0.03, 2.5), ArgumentError);
}

TEST(Cir, MomentsAndBondMatchClosedForms) {
  const auto m = cir();
  for (double x : {0.0, 0.02, 0.08}) {
    for (double t : {0.01, 0.5, 2.0, 5.0}) {
      expect_rel(transition_mean(m, 0, x, t), kCir.mean(x, t), 1e-13);
      if (x > 0.0 || t > 0.0) expect_rel(transition_variance(m, 0, x, t), kCir.variance(x, t), 1e-12);
      for (int n = 1; n <= 3; ++n) expect_rel(bond_laplace(m, 0, x, n, t), kCir.bond(x, n, t), 1e-12);
      expect_rel(product_mean(m, 0, x, t, 0.7), kCir.product(x, t, 0.7), 1e-12);
    }
  }
}

TEST(Cir, LaplaceIdentities) {
  const CirParams p{kCir.a, kCir.b, kCir.sigma};
  const auto m = cir();
  for (double t : {0.0, 0.3, 1.0, 4.0}) {
    EXPECT_EQ(cir_joint_laplace(p, 0.05, 0.0, 0.0, t), 1.0);
    for (int n = 1; n <= 3; ++n) {
      EXPECT_EQ(bond_laplace(m, 0, 0.05, n, t), cir_joint_laplace(p, 0.05, 0.0, n, t));
    }
  }
  const double t = 1.5;
  const double eps = 1e-6;
  const double slope = (cir_joint_laplace(p, 0.05, eps, 0.0, t) -
                        cir_joint_laplace(p, 0.05, -0.0, 0.0, t)) / eps;
  expect_rel(-slope, transition_mean(m, 0, 0.05, t), 1e-5);
}

TEST(Cir, ChiSquareLawReproducesLaplaceTransform) {
  const CirParams p{kCir.a, kCir.b, kCir.sigma};
  const auto& reg = cir().regime(0);
  for (double tilt : {0.0, 1.0, 3.0}) {
    const double t = 0.8;
    const double x = 0.03;
    const auto law = reg.law(x, t, tilt);
    ASSERT_EQ(law.shape, TransitionLaw::Shape::ScaledNoncentralChiSquared);
    for (double lam : {0.5, 5.0, 40.0}) {
      const double c = law.scale;
      const double from_law = std::pow(1 + 2 * lam * c, -law.dof / 2) *
                              std::exp(-law.noncentrality * lam * c / (1 + 2 * lam * c));
      const double direct =
          cir_joint_laplace(p, x, lam, tilt, t) / cir_joint_laplace(p, x, 0.0, tilt, t);
      expect_rel(from_law, direct, 1e-12);
    }
  }
}

TEST(Cir, BondIsMonotone) {
  const auto m = cir();
  for (double t : {0.5, 2.0, 5.0}) {
    double prev = 1.0;
    for (int n = 1; n <= 4; ++n) {
      const double v = bond_laplace(m, 0, 0.04, n, t);
      EXPECT_LT(v, prev);
      prev = v;
    }
    EXPECT_GT(bond_laplace(m, 0, 0.01, 1, t), bond_laplace(m, 0, 0.09, 1, t));
  }
  EXPECT_GT(bond_laplace(m, 0, 0.04, 1, 1.0), bond_laplace(m, 0, 0.04, 1, 2.0));
}

TEST(Cir, FellerWarningAndGaussianOnlyOperations) {
  const auto bad = RateModel::cir({{0.001, 1.0, 0.2}});
  EXPECT_FALSE(bad.diagnostics().empty());
  EXPECT_TRUE(cir().diagnostics().empty());
  EXPECT_THROW(integrated_mean(cir(), 0, 0.03, 1.0), UnsupportedOperation);
  RngStream rng(1, 1);
  EXPECT_THROW(cir().regime(0).exact_step(0.03, 0.0, 0.1, rng, true), ArgumentError);
}

TEST(Quadrature, GaussianRuleMatchesLaw) {
  const auto q = transition_quadrature(vasicek(), 0, 0.03, 0.7, 8);
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    m1 += q.weights[k] * q.nodes[k];
    m2 += q.weights[k] * q.nodes[k] * q.nodes[k];
  }
  EXPECT_NEAR(m1, kVas.mean(0.03, 0.7), 1e-15);
  EXPECT_NEAR(m2 - m1 * m1, kVas.variance(0.7), 1e-15);
  EXPECT_EQ(q.order, 8);
}

TEST(Quadrature, ChiSquareRuleMatchesLawAndStaysNonNegative) {
  for (double x : {0.0, 0.01, 0.06}) {
    const auto q = transition_quadrature(cir(), 0, x, 0.4, 8);
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      EXPECT_GE(q.nodes[k], 0.0);
      m1 += q.weights[k] * q.nodes[k];
      m2 += q.weights[k] * q.nodes[k] * q.nodes[k];
    }
    expect_rel(m1, kCir.mean(x, 0.4), 1e-9);
    expect_rel(m2 - m1 * m1, kCir.variance(x, 0.4), 1e-7);
  }
}

std::vector<double> draws(const RateModel& m, double r0, double dt, int pieces, std::uint64_t seed,
                          int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    RngStream rng(seed, static_cast<std::uint64_t>(k));
    double r = r0;
    for (int p = 0; p < pieces; ++p) r = exact_step(m, 0, r, dt / pieces, rng);
    out[static_cast<std::size_t>(k)] = r;
  }
  return out;
}

TEST(ExactStep, HalfStepCompositionMatchesFullStep) {
  const int n = 100000;
  for (const auto& m : {vasicek(), cir()}) {
    const auto full = draws(m, 0.03, 0.5, 1, 101, n);
    const auto half = draws(m, 0.03, 0.5, 2, 202, n);
    EXPECT_LT(oracle::ks_statistic(full, half), oracle::ks_critical(0.01, n, n));
  }
}

TEST(ExactStep, SampleMomentsMatchTransitionLaw) {
  const int n = 100000;
  const auto m = cir();
  const auto x = draws(m, 0.02, 1.0, 1, 7, n);
  double s1 = 0.0;
  for (double v : x) s1 += v;
  const double sd = std::sqrt(kCir.variance(0.02, 1.0));
  EXPECT_NEAR(s1 / n, kCir.mean(0.02, 1.0), 4 * sd / std::sqrt(n));
}

}  // namespace
}  // namespace smrate
