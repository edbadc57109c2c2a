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

// Serial against OpenMP execution for the two heavy kernels: the lattice
// march of the moment engine and the replication loop of the estimators.

#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "smrate/moment_engine.hpp"
#include "smrate/monte_carlo.hpp"

namespace {

using namespace smrate;

SemiMarkovKernel testbed_kernel() {
  return SemiMarkovKernel(2, {0, 1, 1, 0},
                          {std::nullopt, SojournDistribution::weibull(2.0, 1.0),
                           SojournDistribution::weibull(1.5, 0.8), std::nullopt});
}

RateModel testbed_rates() {
  return RateModel::vasicek({{1.0, 0.05, 0.02}, {0.5, 0.02, 0.01}});
}

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void BM_ZcbSurface(benchmark::State& state) {
  const auto k = testbed_kernel();
  const auto m = testbed_rates();
  SolverConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 2.0;
  cfg.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(solve_zcb_moment(2, k, m, cfg).values().data());
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_ZcbSurface)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ProductSurface(benchmark::State& state) {
  const auto k = testbed_kernel();
  const auto m = testbed_rates();
  SolverConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 2.0;
  cfg.execution = mode(state);
  const auto R = std::make_shared<const MomentSurface>(solve_rate_mean(k, m, cfg));
  cfg.horizon = 1.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_product_moment(0.5, k, m, cfg, R).values().data());
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_ProductSurface)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ZcbEstimator(benchmark::State& state) {
  const auto k = testbed_kernel();
  const auto m = testbed_rates();
  const int orders[] = {1, 2};
  const double times[] = {0.5, 1.0, 2.0};
  const SimulationOptions opts{0.01, false, mode(state)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        estimate_zcb_moments(k, m, {0, 0.0}, 0.03, orders, times, 20000, 1, opts));
  }
  state.SetItemsProcessed(state.iterations() * 20000);
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_ZcbEstimator)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RateEstimator(benchmark::State& state) {
  const auto k = testbed_kernel();
  const auto m = testbed_rates();
  const double times[] = {0.5, 1.0};
  const double lags[] = {0.0, 0.5};
  const SimulationOptions opts{HUGE_VAL, false, mode(state)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        estimate_rate_moments_grid(k, m, {0, 0.0}, 0.03, times, lags, 100000, 1, opts));
  }
  state.SetItemsProcessed(state.iterations() * 100000);
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_RateEstimator)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
