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

// Renewal-equation solvers for moments of the modulated discount factor and
// force of interest.
//
// Every quantity X is first computed at zero initial backward time on a
// lattice (state i) x (time to maturity s_k = k * step) x (rate node x_p) by
// marching the renewal equation forward in s:
//
//   X_i(x, s) = S_i(s) F_i(x, s)
//             + sum_j int_0^s dQ_ij(theta) C_i(x, theta) E[X_j(y, s - theta)]
//
// where S_i = 1 - H_i, F is the no-switch term, C a path weight and the
// expectation runs over the law of the regime-i rate at theta started at x.
// The theta integral uses product-trapezoid weights; the expectation uses a
// transition quadrature with linear interpolation of X_j in y. A second
// pass evaluates the same right-hand side with backward-conditioned weights
// to reach arbitrary initial backward time u.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "smrate/rate_models.hpp"
#include "smrate/semi_markov.hpp"

namespace smrate {

enum class Quantity { ZcbMoment, RateMean, ProductMoment };
std::string_view to_string(Quantity quantity);

/// How the mid-window term of the product moment couples r(s) to the rate
/// at the first jump.
///   Joint       E[r(s) R_j(r(tau), .)] under the joint law of the pair.
///   Factorized  E[r(s)] * E[R_j(r(tau), .)], treating the two as independent.
enum class Coupling { Joint, Factorized };
std::string_view to_string(Coupling coupling);

enum class Execution { Serial, Parallel };

struct RateGridSpec {
  /// Bounds default to the stationary mean -/+ 6 stationary standard
  /// deviations across regimes (clipped at 0 for CIR). Regimes without a
  /// stationary law require explicit bounds.
  std::optional<double> lower;
  std::optional<double> upper;
  std::size_t nodes = 121;
};

struct SolverConfig {
  double step = 0.005;
  double horizon = 5.0;
  RateGridSpec rate_grid;
  int quadrature_order = 8;
  /// Largest distance, as a fraction of the rate-grid width, by which a
  /// quadrature node may leave the grid (values there are extrapolated
  /// linearly). Beyond it the solve fails with GridCoverageError.
  double coverage_tolerance = 1.0;
  /// Floor for the variance check in covariance().
  double consistency_tolerance = 1e-6;
  Coupling coupling = Coupling::Joint;
  Execution execution = Execution::Parallel;
};

/// Uniform rate lattice x_p = lower + p * spacing, p = 0..nodes-1.
class RateGrid {
 public:
  RateGrid(double lower, double upper, std::size_t nodes);

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  std::size_t nodes() const noexcept { return n_; }
  double spacing() const noexcept { return dx_; }
  double at(std::size_t p) const noexcept { return lower_ + dx_ * static_cast<double>(p); }
  bool contains(double r) const noexcept;
  bool operator==(const RateGrid& other) const noexcept;

 private:
  double lower_;
  double upper_;
  std::size_t n_;
  double dx_;
};

RateGrid make_rate_grid(const RateModel& model, const RateGridSpec& spec);

struct SurfaceDiagnostics {
  /// Transition quadratures that fell back to a lower order.
  std::size_t reduced_order_rules = 0;
  /// Largest excursion of a quadrature node outside the grid, as a fraction
  /// of the grid width.
  double max_escape = 0.0;
  /// Lattice size and the quadrature order actually requested.
  std::size_t lattice_points = 0;
  int quadrature_order = 0;
};

namespace detail {
struct SurfaceData;
}

/// Backward-zero lattice values of one quantity plus everything needed to
/// evaluate it at other backward times.
class MomentSurface {
 public:
  explicit MomentSurface(std::shared_ptr<const detail::SurfaceData> data);

  Quantity quantity() const;
  /// Moment order n (ZcbMoment only; 0 otherwise).
  int order() const;
  /// Lag h (ProductMoment only; 0 otherwise).
  double lag() const;
  std::size_t states() const;
  const TimeGrid& time_grid() const;
  const RateGrid& rate_grid() const;
  const SolverConfig& config() const;
  const SurfaceDiagnostics& diagnostics() const;

  double value(std::size_t i, std::size_t k, std::size_t p) const;
  /// Values laid out as [(k * states + i) * nodes + p].
  std::span<const double> values() const;
  /// Bilinear interpolation in (s, r). Throws GridCoverageError outside the
  /// rate grid and ArgumentError beyond the time horizon.
  double interpolate(std::size_t i, double s, double r) const;

  const detail::SurfaceData& data() const { return *data_; }

 private:
  std::shared_ptr<const detail::SurfaceData> data_;
};

/// n-th moment of the discount factor exp(-int_0^s delta).
MomentSurface solve_zcb_moment(int n, const SemiMarkovKernel& kernel, const RateModel& model,
                               const SolverConfig& config);
/// E[delta(s)].
MomentSurface solve_rate_mean(const SemiMarkovKernel& kernel, const RateModel& model,
                              const SolverConfig& config);
/// E[delta(s) delta(s + lag)] for s up to the configured horizon. Needs the
/// rate-mean surface on the same lattice with horizon >= horizon + lag.
MomentSurface solve_product_moment(double lag, const SemiMarkovKernel& kernel,
                                   const RateModel& model, const SolverConfig& config,
                                   std::shared_ptr<const MomentSurface> rate_mean);

/// Value at state i, initial backward u, initial rate r and time s.
double evaluate(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                const RateModel& model, std::size_t i, double u, double r, double s);
double evaluate_zcb_moment(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                           const RateModel& model, std::size_t i, double u, double r, double s);
double evaluate_rate_mean(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                          const RateModel& model, std::size_t i, double u, double r, double s);
double evaluate_product_moment(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                               const RateModel& model, std::size_t i, double u, double r,
                               double s);

/// Cov[delta(s), delta(s + h)] = Xi(s, h) - R(s) R(s + h), using the kernel
/// and model the surfaces were solved with. At h = 0 a value below
/// -consistency_tolerance raises NumericError.
double covariance(const MomentSurface& product, const MomentSurface& rate_mean, std::size_t i,
                  double u, double r, double s, double h);

}  // namespace smrate
