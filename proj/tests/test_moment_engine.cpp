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

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "smrate/error.hpp"
#include "smrate/moment_engine.hpp"
#include "smrate/monte_carlo.hpp"

namespace smrate {
namespace {

using SD = SojournDistribution;

SemiMarkovKernel single() { return SemiMarkovKernel(1, {1.0}, {SD::weibull(1.5, 1.0)}); }

SemiMarkovKernel pair() {
  return SemiMarkovKernel(2, {0, 1, 1, 0},
                          {std::nullopt, SD::weibull(2.0, 1.0), SD::weibull(1.5, 0.8),
                           std::nullopt});
}

RateModel pair_rates() { return RateModel::vasicek({{1.0, 0.05, 0.02}, {0.5, 0.02, 0.01}}); }

SolverConfig small(double horizon = 1.0) {
  SolverConfig c;
  c.step = 0.01;
  c.horizon = horizon;
  c.rate_grid.nodes = 61;
  return c;
}

TEST(RateGrid, DefaultCoversStationaryLaws) {
  const auto g = make_rate_grid(pair_rates(), {});
  EXPECT_EQ(g.nodes(), 121u);
  EXPECT_LT(g.lower(), 0.02 - 5 * 0.01 / std::sqrt(1.0));
  EXPECT_GT(g.upper(), 0.05 + 5 * 0.02 / std::sqrt(2.0));
  const auto c = make_rate_grid(RateModel::cir({{0.04, 1.0, 0.1}}), {});
  EXPECT_GE(c.lower(), 0.0);
}

TEST(RateGrid, NonStationaryModelsNeedBounds) {
  const auto hw = RateModel::hull_white({{PiecewiseLinear::constant(0.02, 5.0),
                                          PiecewiseLinear::constant(0.5, 5.0),
                                          PiecewiseLinear::constant(0.01, 5.0)}});
  EXPECT_THROW(make_rate_grid(hw, {}), ArgumentError);
  EXPECT_NO_THROW(make_rate_grid(hw, {-0.05, 0.1, 41}));
}

TEST(Engine, InitialValues) {
  const auto k = pair();
  const auto m = pair_rates();
  const auto cfg = small(0.5);
  const auto v2 = solve_zcb_moment(2, k, m, cfg);
  const auto R = std::make_shared<const MomentSurface>(solve_rate_mean(k, m, cfg));
  auto cfg_xi = cfg;
  cfg_xi.horizon = 0.3;
  const auto xi = solve_product_moment(0.2, k, m, cfg_xi, R);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t p = 0; p < v2.rate_grid().nodes(); p += 7) {
      const double x = v2.rate_grid().at(p);
      EXPECT_EQ(v2.value(i, 0, p), 1.0);
      EXPECT_NEAR(R->value(i, 0, p), x, 1e-15);
      // At s = 0 the product moment is x times the rate mean at the lag.
      EXPECT_NEAR(xi.value(i, 0, p), x * R->value(i, 20, p), 1e-12);
    }
  }
}

TEST(Engine, SingleRegimeCollapsesToClosedForm) {
  const auto k = single();
  const oracle::Vasicek vas{0.5, 0.04, 0.02};
  const auto m = RateModel::vasicek({{vas.a, vas.b, vas.sigma}});
  const auto cfg = small(1.0);
  for (int n : {1, 2}) {
    const auto v = solve_zcb_moment(n, k, m, cfg);
    double worst = 0.0;
    for (std::size_t t = 0; t < v.time_grid().nodes(); ++t) {
      for (std::size_t p = 0; p < v.rate_grid().nodes(); ++p) {
        const double x = v.rate_grid().at(p);
        worst = std::max(worst, std::fabs(v.value(0, t, p) - vas.bond(x, n, v.time_grid().at(t))));
      }
    }
    EXPECT_LT(worst, 1e-4) << "n=" << n;
  }
  const auto R = std::make_shared<const MomentSurface>(solve_rate_mean(k, m, cfg));
  for (std::size_t t = 0; t < R->time_grid().nodes(); t += 10) {
    for (std::size_t p = 0; p < R->rate_grid().nodes(); p += 10) {
      const double x = R->rate_grid().at(p);
      EXPECT_NEAR(R->value(0, t, p), vas.mean(x, R->time_grid().at(t)), 1e-5);
    }
  }
  auto cfg_xi = cfg;
  cfg_xi.horizon = 0.7;
  const auto xi = solve_product_moment(0.3, k, m, cfg_xi, R);
  for (std::size_t t = 0; t < xi.time_grid().nodes(); t += 10) {
    for (std::size_t p = 10; p + 10 < xi.rate_grid().nodes(); p += 10) {
      const double x = xi.rate_grid().at(p);
      EXPECT_NEAR(xi.value(0, t, p), vas.product(x, xi.time_grid().at(t), 0.3), 2e-6);
    }
  }
}

TEST(Engine, SerialAndParallelAgreeBitwise) {
  const auto k = pair();
  const auto m = pair_rates();
  auto serial = small(0.6);
  serial.execution = Execution::Serial;
  auto parallel = serial;
  parallel.execution = Execution::Parallel;
  const auto a = solve_zcb_moment(2, k, m, serial);
  const auto b = solve_zcb_moment(2, k, m, parallel);
  ASSERT_EQ(a.values().size(), b.values().size());
  for (std::size_t q = 0; q < a.values().size(); ++q) ASSERT_EQ(a.values()[q], b.values()[q]);
  const auto Ra = std::make_shared<const MomentSurface>(solve_rate_mean(k, m, serial));
  const auto Rb = std::make_shared<const MomentSurface>(solve_rate_mean(k, m, parallel));
  serial.horizon = parallel.horizon = 0.4;
  const auto xa = solve_product_moment(0.2, k, m, serial, Ra);
  const auto xb = solve_product_moment(0.2, k, m, parallel, Rb);
  for (std::size_t q = 0; q < xa.values().size(); ++q) ASSERT_EQ(xa.values()[q], xb.values()[q]);
}

TEST(Engine, JensenGapIsNonNegative) {
  const auto k = pair();
  const auto m = pair_rates();
  const auto cfg = small(1.0);
  const auto v1 = solve_zcb_moment(1, k, m, cfg);
  const auto v2 = solve_zcb_moment(2, k, m, cfg);
  for (std::size_t q = 0; q < v1.values().size(); ++q) {
    ASSERT_GE(v2.values()[q] - v1.values()[q] * v1.values()[q], -1e-8);
  }
}

TEST(Engine, EvaluationAtZeroAgeReproducesLattice) {
  const auto k = pair();
  const auto m = pair_rates();
  const auto v = solve_zcb_moment(1, k, m, small(1.0));
  const auto& g = v.rate_grid();
  for (std::size_t t : {0u, 17u, 100u}) {
    for (std::size_t p : {3u, 30u, 59u}) {
      EXPECT_NEAR(evaluate(v, k, m, 1, 0.0, g.at(p), v.time_grid().at(t)), v.value(1, t, p),
                  1e-13);
    }
  }
  EXPECT_NEAR(evaluate(v, k, m, 0, 0.0, 0.5 * (g.at(4) + g.at(5)), 0.5),
              0.5 * (v.value(0, 50, 4) + v.value(0, 50, 5)), 1e-13);
}

TEST(Engine, AgedEvaluationAgreesWithSimulation) {
  const auto k = pair();
  const auto m = pair_rates();
  const auto cfg = small(1.0);
  const auto v = solve_zcb_moment(1, k, m, cfg);
  const auto mc = estimate_zcb_moment(k, m, {0, 0.5}, 0.03, 1, 1.0, 40000, 99);
  const double a = evaluate_zcb_moment(v, k, m, 0, 0.5, 0.03, 1.0);
  EXPECT_LT(std::fabs(mc.estimate - a), 3.0 * mc.standard_error);
}

TEST(Engine, FactorizedAndJointCouplingCoincideWithoutLag) {
  const auto k = pair();
  const auto m = pair_rates();
  auto joint = small(0.5);
  auto fact = joint;
  fact.coupling = Coupling::Factorized;
  const auto R = std::make_shared<const MomentSurface>(solve_rate_mean(k, m, joint));
  const auto a = solve_product_moment(0.0, k, m, joint, R);
  const auto b = solve_product_moment(0.0, k, m, fact, R);
  for (std::size_t q = 0; q < a.values().size(); ++q) ASSERT_EQ(a.values()[q], b.values()[q]);
}

TEST(Engine, ProductMomentNeedsMatchingRateMean) {
  const auto k = pair();
  const auto m = pair_rates();
  auto cfg = small(0.5);
  EXPECT_THROW(solve_product_moment(0.1, k, m, cfg, nullptr), DependencyError);
  const auto R = std::make_shared<const MomentSurface>(solve_rate_mean(k, m, cfg));
  EXPECT_THROW(solve_product_moment(0.1, k, m, cfg, R), DependencyError);
  const auto v = std::make_shared<const MomentSurface>(solve_zcb_moment(1, k, m, cfg));
  cfg.horizon = 0.4;
  EXPECT_THROW(solve_product_moment(0.1, k, m, cfg, v), DependencyError);
  EXPECT_THROW(solve_product_moment(0.015, k, m, cfg, R), ArgumentError);
}

TEST(Engine, CovarianceChecksLagAndSign) {
  const auto k = pair();
  const auto m = pair_rates();
  auto cfg = small(0.6);
  const auto R = std::make_shared<const MomentSurface>(solve_rate_mean(k, m, cfg));
  cfg.horizon = 0.4;
  const auto xi0 = solve_product_moment(0.0, k, m, cfg, R);
  const auto xi2 = solve_product_moment(0.2, k, m, cfg, R);
  EXPECT_GT(covariance(xi0, *R, 0, 0.3, 0.03, 0.4, 0.0), 0.0);
  EXPECT_NO_THROW(covariance(xi2, *R, 1, 0.0, 0.03, 0.2, 0.2));
  EXPECT_THROW(covariance(xi2, *R, 1, 0.0, 0.03, 0.2, 0.1), ArgumentError);
}

TEST(Engine, NarrowGridFailsCoverage) {
  auto cfg = small(0.5);
  cfg.rate_grid = {0.029, 0.031, 11};
  EXPECT_THROW(solve_zcb_moment(1, pair(), pair_rates(), cfg), GridCoverageError);
}

TEST(Engine, RejectsBadArguments) {
  const auto k = pair();
  const auto m = pair_rates();
  EXPECT_THROW(solve_zcb_moment(0, k, m, small()), ArgumentError);
  EXPECT_THROW(solve_zcb_moment(1, single(), m, small()), ArgumentError);
  auto cfg = small();
  cfg.step = -1;
  EXPECT_THROW(solve_zcb_moment(1, k, m, cfg), ArgumentError);
}

TEST(Engine, CirSurfacesStayInsideUnitInterval) {
  const auto k = single();
  const auto m = RateModel::cir({{0.04, 1.0, 0.1}});
  const auto v = solve_zcb_moment(1, k, m, small(1.0));
  for (double x : v.values()) {
    ASSERT_GT(x, 0.0);
    ASSERT_LE(x, 1.0 + 1e-12);
  }
}

}  // namespace
}  // namespace smrate
