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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smrate/moment_engine.hpp"
#include "smrate/rate_models.hpp"
#include "smrate/rng.hpp"
#include "smrate/semi_markov.hpp"

namespace smrate {

/// One row of a simulated path. At a jump time two rows share t, r and the
/// integral: the first carries the old state, the second the new one.
struct PathPoint {
  double t;
  std::size_t state;
  double r;
  /// Trapezoidal int_0^t r.
  double integral;
};

struct PathRecord {
  BackwardState start;
  double r0 = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<RenewalRecord> jumps;
  std::vector<PathPoint> points;
};

struct EstimatorReport {
  std::string quantity;
  std::size_t state = 0;
  double backward = 0.0;
  double r0 = 0.0;
  double s = 0.0;
  double lag = 0.0;
  int order = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

struct SimulationOptions {
  /// Largest substep between grid points; jump times are always hit exactly.
  double step = 0.01;
  /// Pair every replication with its sign-flipped twin (Gaussian regimes).
  bool antithetic = false;
  Execution execution = Execution::Parallel;
};

/// Regime-switching short-rate path on [0, horizon]. Each substep samples
/// the exact transition of the current regime; substeps land on every jump
/// time and on every multiple of `step`.
PathRecord simulate_path(const SemiMarkovKernel& kernel, const RateModel& model,
                         const BackwardState& start, double r0, double horizon, double step,
                         RngStream& rng, bool antithetic = false);

/// E[exp(-n int_0^s delta)] for every (n, s) pair; reports are ordered
/// n-major. Replication k draws from stream k of `seed`.
std::vector<EstimatorReport> estimate_zcb_moments(const SemiMarkovKernel& kernel,
                                                  const RateModel& model,
                                                  const BackwardState& start, double r0,
                                                  std::span<const int> orders,
                                                  std::span<const double> times, std::size_t reps,
                                                  std::uint64_t seed,
                                                  const SimulationOptions& options = {});

EstimatorReport estimate_zcb_moment(const SemiMarkovKernel& kernel, const RateModel& model,
                                    const BackwardState& start, double r0, int n, double s,
                                    std::size_t reps, std::uint64_t seed,
                                    const SimulationOptions& options = {});

/// E[delta(s)] and E[delta(s) delta(s + h)] for every (s, h) pair, sampled
/// exactly at the requested times (no time discretization). Returns, per
/// pair in s-major order, the report for delta(s) and for the product.
std::vector<std::pair<EstimatorReport, EstimatorReport>> estimate_rate_moments_grid(
    const SemiMarkovKernel& kernel, const RateModel& model, const BackwardState& start,
    double r0, std::span<const double> times, std::span<const double> lags, std::size_t reps,
    std::uint64_t seed, const SimulationOptions& options = {});

std::pair<EstimatorReport, EstimatorReport> estimate_rate_moments(
    const SemiMarkovKernel& kernel, const RateModel& model, const BackwardState& start,
    double r0, double s, double h, std::size_t reps, std::uint64_t seed,
    const SimulationOptions& options = {});

/// P[Z(t) = j | Z(0) = start.state, B(0) = start.backward] for each t and j,
/// ordered t-major.
std::vector<EstimatorReport> estimate_occupancy(const SemiMarkovKernel& kernel,
                                                const BackwardState& start,
                                                std::span<const double> times, std::size_t reps,
                                                std::uint64_t seed,
                                                Execution execution = Execution::Parallel);

/// Mean and standard error of per-replication samples, summed in index
/// order.
std::pair<double, double> mean_and_standard_error(std::span<const double> samples);

}  // namespace smrate
