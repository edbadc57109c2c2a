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

#include "smrate/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "parallel.hpp"
#include "smrate/error.hpp"

namespace smrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_start(const SemiMarkovKernel& kernel, const RateModel& model,
                 const BackwardState& start) {
  if (kernel.size() != model.size()) {
    throw ArgumentError("simulation: kernel and rate model state counts differ");
  }
  if (start.state >= kernel.size()) throw ArgumentError("simulation: start state out of range");
  if (!(start.backward >= 0.0)) throw ArgumentError("simulation: backward must be >= 0");
}

void check_reps(std::size_t reps, bool antithetic) {
  if (reps < 100) throw ArgumentError("estimator: need at least 100 replications");
  if (antithetic && reps % 2 != 0) {
    throw ArgumentError("estimator: antithetic sampling needs an even replication count");
  }
}

/// Simulates one path and calls visit(point) for every row. Substeps end at
/// multiples of `step` (none when step is infinite), at every jump time and
/// at every entry of the sorted `stops`.
template <class Visit>
void run_path(const SemiMarkovKernel& kernel, const RateModel& model, const BackwardState& start,
              double r0, double horizon, double step, std::span<const double> stops,
              RngStream& rng, bool antithetic, std::vector<RenewalRecord>* jumps_out,
              Visit&& visit) {
  const auto jumps = sample_markov_renewal_path(kernel, start, horizon, rng);
  if (jumps_out != nullptr) {
    jumps_out->clear();
    for (const auto& j : jumps) {
      if (j.time <= horizon) jumps_out->push_back(j);
    }
  }
  double r = r0;
  double integral = 0.0;
  std::size_t stop = 0;
  visit(PathPoint{0.0, jumps.front().state, r, integral});
  for (std::size_t n = 0; n < jumps.size(); ++n) {
    const std::size_t state = jumps[n].state;
    const Regime& regime = model.regime(state);
    const double seg_start = jumps[n].time;
    if (seg_start >= horizon) break;
    const double seg_end = n + 1 < jumps.size() ? std::min(jumps[n + 1].time, horizon) : horizon;
    double t = seg_start;
    double clock = 0.0;
    while (t < seg_end) {
      while (stop < stops.size() && stops[stop] <= t) ++stop;
      double next = seg_end;
      if (std::isfinite(step)) {
        double grid = step * (std::floor(t / step) + 1.0);
        if (grid - t <= 1e-12 * step) grid += step;
        next = std::min(next, grid);
      }
      if (stop < stops.size()) next = std::min(next, stops[stop]);
      const double dt = next - t;
      const double r_next = regime.exact_step(r, clock, dt, rng, antithetic);
      integral += 0.5 * (r + r_next) * dt;
      r = r_next;
      clock += dt;
      t = next;
      visit(PathPoint{t, state, r, integral});
    }
    if (n + 1 < jumps.size() && jumps[n + 1].time <= horizon) {
      // Regime switch: the rate is continuous across the jump.
      visit(PathPoint{t, jumps[n + 1].state, r, integral});
    }
  }
}

std::vector<double> sorted_unique(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t index_of(const std::vector<double>& sorted, double t) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) -
                                  sorted.begin());
}

/// Per-target reports from samples[rep * targets + target]; antithetic
/// pairs (2k, 2k+1) are averaged before the variance is taken.
std::vector<std::pair<double, double>> summarize(const std::vector<double>& samples,
                                                 std::size_t reps, std::size_t targets,
                                                 bool antithetic) {
  std::vector<std::pair<double, double>> out(targets);
  const std::size_t units = antithetic ? reps / 2 : reps;
  std::vector<double> column(units);
  for (std::size_t t = 0; t < targets; ++t) {
    for (std::size_t u = 0; u < units; ++u) {
      column[u] = antithetic
                      ? 0.5 * (samples[(2 * u) * targets + t] + samples[(2 * u + 1) * targets + t])
                      : samples[u * targets + t];
    }
    out[t] = mean_and_standard_error(column);
  }
  return out;
}

}  // namespace

std::pair<double, double> mean_and_standard_error(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw ArgumentError("standard error: need at least two samples");
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

PathRecord simulate_path(const SemiMarkovKernel& kernel, const RateModel& model,
                         const BackwardState& start, double r0, double horizon, double step,
                         RngStream& rng, bool antithetic) {
  check_start(kernel, model, start);
  if (!(step > 0.0)) throw ArgumentError("simulate_path: step must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw ArgumentError("simulate_path: horizon must be finite and >= 0");
  }
  PathRecord rec;
  rec.start = start;
  rec.r0 = r0;
  rec.seed = rng.seed();
  rec.stream = rng.stream_id();
  run_path(kernel, model, start, r0, horizon, step, {}, rng, antithetic, &rec.jumps,
           [&](const PathPoint& p) { rec.points.push_back(p); });
  return rec;
}

std::vector<EstimatorReport> estimate_zcb_moments(const SemiMarkovKernel& kernel,
                                                  const RateModel& model,
                                                  const BackwardState& start, double r0,
                                                  std::span<const int> orders,
                                                  std::span<const double> times, std::size_t reps,
                                                  std::uint64_t seed,
                                                  const SimulationOptions& options) {
  check_start(kernel, model, start);
  check_reps(reps, options.antithetic);
  if (!(options.step > 0.0)) throw ArgumentError("estimator: step must be > 0");
  for (int n : orders) {
    if (n < 1) throw ArgumentError("estimator: moment order must be >= 1");
  }
  for (double s : times) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ArgumentError("estimator: s must be >= 0");
  }
  const auto stops = sorted_unique(times);
  const double horizon = stops.empty() ? 0.0 : stops.back();
  const std::size_t targets = orders.size() * times.size();
  std::vector<double> samples(reps * targets, 0.0);
  detail::for_each_index(reps, options.execution == Execution::Parallel, [&](std::size_t rep) {
    const bool twin = options.antithetic && rep % 2 == 1;
    RngStream rng(seed, options.antithetic ? rep / 2 : rep);
    std::vector<double> at(stops.size(), 0.0);
    std::size_t next = 0;
    while (next < stops.size() && stops[next] == 0.0) ++next;
    if (horizon > 0.0) {
      run_path(kernel, model, start, r0, horizon, options.step, stops, rng, twin, nullptr,
               [&](const PathPoint& p) {
                 while (next < stops.size() && stops[next] == p.t) at[next++] = p.integral;
               });
    }
    for (std::size_t a = 0; a < orders.size(); ++a) {
      for (std::size_t b = 0; b < times.size(); ++b) {
        const double I = at[index_of(stops, times[b])];
        samples[rep * targets + a * times.size() + b] = std::exp(-orders[a] * I);
      }
    }
  });
  const auto stats = summarize(samples, reps, targets, options.antithetic);
  std::vector<EstimatorReport> out;
  for (std::size_t a = 0; a < orders.size(); ++a) {
    for (std::size_t b = 0; b < times.size(); ++b) {
      EstimatorReport rep;
      rep.quantity = "zcb_moment";
      rep.state = start.state;
      rep.backward = start.backward;
      rep.r0 = r0;
      rep.s = times[b];
      rep.order = orders[a];
      std::tie(rep.estimate, rep.standard_error) = stats[a * times.size() + b];
      rep.replications = reps;
      rep.seed = seed;
      out.push_back(rep);
    }
  }
  return out;
}

EstimatorReport estimate_zcb_moment(const SemiMarkovKernel& kernel, const RateModel& model,
                                    const BackwardState& start, double r0, int n, double s,
                                    std::size_t reps, std::uint64_t seed,
                                    const SimulationOptions& options) {
  const int orders[] = {n};
  const double times[] = {s};
  return estimate_zcb_moments(kernel, model, start, r0, orders, times, reps, seed, options)
      .front();
}

std::vector<std::pair<EstimatorReport, EstimatorReport>> estimate_rate_moments_grid(
    const SemiMarkovKernel& kernel, const RateModel& model, const BackwardState& start,
    double r0, std::span<const double> times, std::span<const double> lags, std::size_t reps,
    std::uint64_t seed, const SimulationOptions& options) {
  check_start(kernel, model, start);
  check_reps(reps, options.antithetic);
  std::vector<double> wanted;
  for (double s : times) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ArgumentError("estimator: s must be >= 0");
    for (double h : lags) {
      if (!(h >= 0.0) || !std::isfinite(h)) throw ArgumentError("estimator: lag must be >= 0");
      wanted.push_back(s);
      wanted.push_back(s + h);
    }
  }
  const auto stops = sorted_unique(wanted);
  const double horizon = stops.empty() ? 0.0 : stops.back();
  const std::size_t pairs = times.size() * lags.size();
  const std::size_t targets = 2 * pairs;
  std::vector<double> samples(reps * targets, 0.0);
  detail::for_each_index(reps, options.execution == Execution::Parallel, [&](std::size_t rep) {
    const bool twin = options.antithetic && rep % 2 == 1;
    RngStream rng(seed, options.antithetic ? rep / 2 : rep);
    std::vector<double> rate(stops.size(), r0);
    std::size_t next = 0;
    while (next < stops.size() && stops[next] == 0.0) ++next;
    if (horizon > 0.0) {
      run_path(kernel, model, start, r0, horizon, kInf, stops, rng, twin, nullptr,
               [&](const PathPoint& p) {
                 while (next < stops.size() && stops[next] == p.t) rate[next++] = p.r;
               });
    }
    std::size_t idx = 0;
    for (double s : times) {
      for (double h : lags) {
        const double rs = rate[index_of(stops, s)];
        const double rsh = rate[index_of(stops, s + h)];
        samples[rep * targets + 2 * idx] = rs;
        samples[rep * targets + 2 * idx + 1] = rs * rsh;
        ++idx;
      }
    }
  });
  const auto stats = summarize(samples, reps, targets, options.antithetic);
  std::vector<std::pair<EstimatorReport, EstimatorReport>> out;
  std::size_t idx = 0;
  for (double s : times) {
    for (double h : lags) {
      EstimatorReport mean;
      mean.quantity = "rate_mean";
      mean.state = start.state;
      mean.backward = start.backward;
      mean.r0 = r0;
      mean.s = s;
      std::tie(mean.estimate, mean.standard_error) = stats[2 * idx];
      mean.replications = reps;
      mean.seed = seed;
      EstimatorReport prod = mean;
      prod.quantity = "product_moment";
      prod.lag = h;
      std::tie(prod.estimate, prod.standard_error) = stats[2 * idx + 1];
      out.emplace_back(mean, prod);
      ++idx;
    }
  }
  return out;
}

std::pair<EstimatorReport, EstimatorReport> estimate_rate_moments(
    const SemiMarkovKernel& kernel, const RateModel& model, const BackwardState& start,
    double r0, double s, double h, std::size_t reps, std::uint64_t seed,
    const SimulationOptions& options) {
  const double times[] = {s};
  const double lags[] = {h};
  return estimate_rate_moments_grid(kernel, model, start, r0, times, lags, reps, seed, options)
      .front();
}

std::vector<EstimatorReport> estimate_occupancy(const SemiMarkovKernel& kernel,
                                                const BackwardState& start,
                                                std::span<const double> times, std::size_t reps,
                                                std::uint64_t seed, Execution execution) {
  if (start.state >= kernel.size()) throw ArgumentError("occupancy: start state out of range");
  check_reps(reps, false);
  const std::size_t m = kernel.size();
  double horizon = 0.0;
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ArgumentError("occupancy: t must be >= 0");
    horizon = std::max(horizon, t);
  }
  const std::size_t targets = times.size() * m;
  std::vector<double> samples(reps * targets, 0.0);
  detail::for_each_index(reps, execution == Execution::Parallel, [&](std::size_t rep) {
    RngStream rng(seed, rep);
    const auto jumps = sample_markov_renewal_path(kernel, start, horizon, rng);
    for (std::size_t a = 0; a < times.size(); ++a) {
      std::size_t state = jumps.front().state;
      for (const auto& j : jumps) {
        if (j.time <= times[a]) state = j.state;
      }
      samples[rep * targets + a * m + state] = 1.0;
    }
  });
  const auto stats = summarize(samples, reps, targets, false);
  std::vector<EstimatorReport> out;
  for (std::size_t a = 0; a < times.size(); ++a) {
    for (std::size_t j = 0; j < m; ++j) {
      EstimatorReport rep;
      rep.quantity = "occupancy_" + std::to_string(j + 1);
      rep.state = start.state;
      rep.backward = start.backward;
      rep.s = times[a];
      std::tie(rep.estimate, rep.standard_error) = stats[a * m + j];
      rep.replications = reps;
      rep.seed = seed;
      out.push_back(rep);
    }
  }
  return out;
}

}  // namespace smrate
