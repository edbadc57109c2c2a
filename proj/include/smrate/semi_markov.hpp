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
#include <optional>
#include <string>
#include <vector>

#include "smrate/rng.hpp"
#include "smrate/sojourn.hpp"

namespace smrate {

/// Markov renewal kernel Q_ij(t) = p_ij * G_ij(t) on a finite state space.
///
/// Rows of the embedded matrix sum to one, or to zero for an absorbing
/// state (H_i == 0). Self-transitions are rejected unless the kernel has a
/// single state, where p_11 = 1 is forced.
class SemiMarkovKernel {
 public:
  /// `embedded` is row-major m x m; `sojourns` is row-major m x m with an
  /// entry for every edge with p_ij > 0.
  SemiMarkovKernel(std::size_t states, std::vector<double> embedded,
                   std::vector<std::optional<SojournDistribution>> sojourns,
                   std::vector<std::string> names = {});

  std::size_t size() const noexcept { return m_; }
  const std::string& name(std::size_t i) const;
  double p(std::size_t i, std::size_t j) const;
  const std::optional<SojournDistribution>& sojourn(std::size_t i, std::size_t j) const;
  bool absorbing(std::size_t i) const;

  /// Q_ij(t).
  double kernel_cdf(std::size_t i, std::size_t j, double t) const;
  /// dQ_ij/dt; right limit at t = 0.
  double kernel_density(std::size_t i, std::size_t j, double t) const;
  /// H_i(t) = sum_k Q_ik(t).
  double unconditional_sojourn(std::size_t i, double t) const;
  /// 1 - H_i(t), accurate in the tail.
  double survival(std::size_t i, double t) const;
  /// Integral of Q_ij over [a, b].
  double kernel_cdf_integral(std::size_t i, std::size_t j, double a, double b) const;

 private:
  void check_index(std::size_t i) const;

  std::size_t m_;
  std::vector<double> p_;
  std::vector<std::optional<SojournDistribution>> g_;
  std::vector<std::string> names_;
};

/// Present regime and time elapsed since it was entered.
struct BackwardState {
  std::size_t state = 0;
  double backward = 0.0;
};

/// Uniform grid t_k = k * step, k = 0..K.
class TimeGrid {
 public:
  TimeGrid(double step, double horizon);
  static TimeGrid with_nodes(double step, std::size_t intervals);

  double step() const noexcept { return step_; }
  std::size_t intervals() const noexcept { return k_; }
  std::size_t nodes() const noexcept { return k_ + 1; }
  double horizon() const noexcept { return step_ * static_cast<double>(k_); }
  double at(std::size_t k) const noexcept { return step_ * static_cast<double>(k); }

 private:
  TimeGrid(double step, std::size_t intervals, bool) : step_(step), k_(intervals) {}
  double step_;
  std::size_t k_;
};

/// Product-trapezoid weights for integrals of the form
///   int_0^{t_k} g(theta) dQ_ij(u + theta) / (1 - H_i(u)).
/// On each cell [theta_l, theta_{l+1}] the integrand g is replaced by its
/// linear interpolant and integrated exactly against the kernel measure, so
///   int_cell g dQ ~= lower(i,j,l) g(theta_l) + upper(i,j,l) g(theta_{l+1}).
/// The weights of all cells of a pair sum to the exact kernel mass.
class ConvolutionWeights {
 public:
  ConvolutionWeights(const SemiMarkovKernel& kernel, double step, std::size_t cells,
                     double backward = 0.0);

  std::size_t states() const noexcept { return m_; }
  std::size_t cells() const noexcept { return cells_; }
  double backward() const noexcept { return u_; }
  double lower(std::size_t i, std::size_t j, std::size_t cell) const {
    return lower_[(i * m_ + j) * cells_ + cell];
  }
  double upper(std::size_t i, std::size_t j, std::size_t cell) const {
    return upper_[(i * m_ + j) * cells_ + cell];
  }
  /// Node weight of theta_l in the integral over [theta_first, theta_last]
  /// (cells first..last-1).
  double node(std::size_t i, std::size_t j, std::size_t l, std::size_t first,
              std::size_t last) const {
    double w = 0.0;
    if (l < last) w += lower(i, j, l);
    if (l > first) w += upper(i, j, l - 1);
    return w;
  }
  /// Conditional survival (1 - H_i(u + t_k)) / (1 - H_i(u)).
  double survival(std::size_t i, std::size_t k) const { return surv_[i * (cells_ + 1) + k]; }

 private:
  std::size_t m_;
  std::size_t cells_;
  double u_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> surv_;
};

/// phi_ij(t_k) (or the backward-conditioned variant) on a time grid.
class TransitionTable {
 public:
  TransitionTable(std::size_t states, TimeGrid grid, double backward);

  std::size_t states() const noexcept { return m_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  double backward() const noexcept { return u_; }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return v_[(k * m_ + i) * m_ + j]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return v_[(k * m_ + i) * m_ + j];
  }
  /// max over (i, k) of |sum_j phi_ij(t_k) - 1|.
  double max_row_drift() const;

 private:
  std::size_t m_;
  TimeGrid grid_;
  double u_;
  std::vector<double> v_;
};

inline constexpr double kRowDriftLimit = 1e-4;
inline constexpr double kDegenerateSurvival = 1e-12;

/// Solves the evolution equation by forward marching with product-trapezoid
/// weights. Throws ConvergenceError when row sums drift past kRowDriftLimit.
TransitionTable transition_probabilities(const SemiMarkovKernel& kernel, const TimeGrid& grid);

/// Backward-conditioned probabilities P[Z(t) = j | Z(0) = i, B(0) = u] in
/// one quadrature pass over a precomputed phi table. Throws
/// DegenerateConditioningError when 1 - H_i(u) <= 1e-12 for some state.
TransitionTable backward_transition_probabilities(const SemiMarkovKernel& kernel, double backward,
                                                  const TransitionTable& phi);

/// One (J_n, T_n) record. T_0 = 0 is the present time.
struct RenewalRecord {
  std::size_t state;
  double time;
};

/// Next state and waiting time out of `state`.
struct Transition {
  std::size_t next;
  double sojourn;
};

/// Draws the first transition out of `start`, conditioned on the current
/// sojourn already having lasted `start.backward`. Returns nullopt for an
/// absorbing state.
std::optional<Transition> sample_first_transition(const SemiMarkovKernel& kernel,
                                                  const BackwardState& start, RngStream& rng);

/// Unconditional transition out of `state` (J from p_i., then W from G_iJ).
std::optional<Transition> sample_transition(const SemiMarkovKernel& kernel, std::size_t state,
                                            RngStream& rng);

/// Samples (J_n, T_n) until the first T_n >= horizon. A horizon of 0 returns
/// the initial record only; an absorbing state ends the sequence.
std::vector<RenewalRecord> sample_markov_renewal_path(const SemiMarkovKernel& kernel,
                                                      const BackwardState& start, double horizon,
                                                      RngStream& rng);

}  // namespace smrate
