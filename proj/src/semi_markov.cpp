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

#include "smrate/semi_markov.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

#include "smrate/error.hpp"

namespace smrate {

// ---------------------------------------------------------------------------
// SemiMarkovKernel

SemiMarkovKernel::SemiMarkovKernel(std::size_t states, std::vector<double> embedded,
                                   std::vector<std::optional<SojournDistribution>> sojourns,
                                   std::vector<std::string> names)
    : m_(states), p_(std::move(embedded)), g_(std::move(sojourns)), names_(std::move(names)) {
  if (m_ == 0) throw ArgumentError("kernel: need at least one state");
  if (p_.size() != m_ * m_ || g_.size() != m_ * m_) {
    throw ArgumentError("kernel: embedded matrix and sojourn table must be m x m");
  }
  if (names_.empty()) {
    for (std::size_t i = 0; i < m_; ++i) names_.push_back(std::to_string(i + 1));
  }
  if (names_.size() != m_) throw ArgumentError("kernel: one name per state required");
  for (std::size_t i = 0; i < m_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m_; ++j) {
      const double pij = p_[i * m_ + j];
      if (!std::isfinite(pij) || pij < 0.0) {
        std::ostringstream msg;
        msg << "kernel: p(" << i + 1 << "," << j + 1 << ") must be a nonnegative number";
        throw ArgumentError(msg.str());
      }
      if (pij > 0.0 && i == j && m_ > 1) {
        throw ArgumentError("kernel: self-transitions are not allowed (state " +
                            std::to_string(i + 1) + ")");
      }
      if (pij > 0.0 && !g_[i * m_ + j]) {
        std::ostringstream msg;
        msg << "kernel: edge " << i + 1 << "->" << j + 1 << " has p > 0 but no sojourn law";
        throw ArgumentError(msg.str());
      }
      row += pij;
    }
    if (std::fabs(row - 1.0) > 1e-12 && row != 0.0) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "kernel: row " << i + 1 << " of the embedded matrix sums to " << row;
      throw ArgumentError(msg.str());
    }
  }
}

void SemiMarkovKernel::check_index(std::size_t i) const {
  if (i >= m_) {
    throw ArgumentError("kernel: state index " + std::to_string(i) + " out of range");
  }
}

const std::string& SemiMarkovKernel::name(std::size_t i) const {
  check_index(i);
  return names_[i];
}

double SemiMarkovKernel::p(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  return p_[i * m_ + j];
}

const std::optional<SojournDistribution>& SemiMarkovKernel::sojourn(std::size_t i,
                                                                    std::size_t j) const {
  check_index(i);
  check_index(j);
  return g_[i * m_ + j];
}

bool SemiMarkovKernel::absorbing(std::size_t i) const {
  check_index(i);
  for (std::size_t j = 0; j < m_; ++j) {
    if (p_[i * m_ + j] > 0.0) return false;
  }
  return true;
}

double SemiMarkovKernel::kernel_cdf(std::size_t i, std::size_t j, double t) const {
  const double pij = p(i, j);
  if (pij == 0.0) return 0.0;
  return pij * g_[i * m_ + j]->cdf(t);
}

double SemiMarkovKernel::kernel_density(std::size_t i, std::size_t j, double t) const {
  const double pij = p(i, j);
  if (pij == 0.0) return 0.0;
  return pij * g_[i * m_ + j]->pdf(t);
}

double SemiMarkovKernel::unconditional_sojourn(std::size_t i, double t) const {
  check_index(i);
  double h = 0.0;
  for (std::size_t k = 0; k < m_; ++k) h += kernel_cdf(i, k, t);
  return h;
}

double SemiMarkovKernel::survival(std::size_t i, double t) const {
  check_index(i);
  if (absorbing(i)) return 1.0;
  double s = 0.0;
  for (std::size_t k = 0; k < m_; ++k) {
    const double pik = p_[i * m_ + k];
    if (pik > 0.0) s += pik * g_[i * m_ + k]->survival(t);
  }
  return s;
}

double SemiMarkovKernel::kernel_cdf_integral(std::size_t i, std::size_t j, double a,
                                             double b) const {
  const double pij = p(i, j);
  if (pij == 0.0) return 0.0;
  return pij * g_[i * m_ + j]->cdf_integral(a, b);
}

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(double step, double horizon) : step_(step), k_(0) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ArgumentError("time grid: step must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw ArgumentError("time grid: horizon must be >= 0");
  }
  const double ratio = horizon / step;
  k_ = static_cast<std::size_t>(std::llround(ratio));
  if (std::fabs(static_cast<double>(k_) * step - horizon) > 1e-12 * std::max(1.0, horizon)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "time grid: horizon " << horizon << " is not a multiple of step " << step;
    throw ArgumentError(msg.str());
  }
}

TimeGrid TimeGrid::with_nodes(double step, std::size_t intervals) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ArgumentError("time grid: step must be > 0");
  return TimeGrid(step, intervals, true);
}

// ---------------------------------------------------------------------------
// ConvolutionWeights

ConvolutionWeights::ConvolutionWeights(const SemiMarkovKernel& kernel, double step,
                                       std::size_t cells, double backward)
    : m_(kernel.size()), cells_(cells), u_(backward) {
  if (!(backward >= 0.0)) throw ArgumentError("convolution weights: backward must be >= 0");
  lower_.assign(m_ * m_ * cells_, 0.0);
  upper_.assign(m_ * m_ * cells_, 0.0);
  surv_.assign(m_ * (cells_ + 1), 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    const double s0 = kernel.survival(i, u_);
    if (!(s0 > kDegenerateSurvival)) {
      std::ostringstream msg;
      msg << "backward conditioning on state " << i + 1 << " at u = " << u_
          << " has 1 - H(u) = " << s0;
      throw DegenerateConditioningError(msg.str());
    }
    for (std::size_t k = 0; k <= cells_; ++k) {
      surv_[i * (cells_ + 1) + k] = kernel.survival(i, u_ + step * static_cast<double>(k)) / s0;
    }
    for (std::size_t j = 0; j < m_; ++j) {
      if (kernel.p(i, j) == 0.0) continue;
      double q_prev = kernel.kernel_cdf(i, j, u_);
      for (std::size_t l = 0; l < cells_; ++l) {
        const double a = u_ + step * static_cast<double>(l);
        const double b = u_ + step * static_cast<double>(l + 1);
        const double q_next = kernel.kernel_cdf(i, j, b);
        const double mass = q_next - q_prev;
        // int_a^b (t - a)/step dQ(t) = Q(b) - (1/step) int_a^b Q(t) dt
        double upper = q_next - kernel.kernel_cdf_integral(i, j, a, b) / step;
        upper = std::clamp(upper, 0.0, mass);
        const std::size_t idx = (i * m_ + j) * cells_ + l;
        lower_[idx] = (mass - upper) / s0;
        upper_[idx] = upper / s0;
        q_prev = q_next;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Transition probabilities

TransitionTable::TransitionTable(std::size_t states, TimeGrid grid, double backward)
    : m_(states), grid_(grid), u_(backward), v_(states * states * grid.nodes(), 0.0) {}

double TransitionTable::max_row_drift() const {
  double drift = 0.0;
  for (std::size_t k = 0; k < grid_.nodes(); ++k) {
    for (std::size_t i = 0; i < m_; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m_; ++j) row += at(i, j, k);
      drift = std::max(drift, std::fabs(row - 1.0));
    }
  }
  return drift;
}

TransitionTable transition_probabilities(const SemiMarkovKernel& kernel, const TimeGrid& grid) {
  const std::size_t m = kernel.size();
  const std::size_t K = grid.intervals();
  for (std::size_t i = 0; i < m; ++i) {
    if (!(kernel.unconditional_sojourn(i, grid.step()) < 1.0)) {
      throw ArgumentError("transition_probabilities: H_i(step) must be < 1; refine the grid");
    }
  }
  const ConvolutionWeights w(kernel, grid.step(), K, 0.0);
  TransitionTable phi(m, grid, 0.0);
  for (std::size_t i = 0; i < m; ++i) phi.at(i, i, 0) = 1.0;

  // The unknown phi(t_k) enters its own equation through the theta = 0 node.
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m);
  if (K > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < m; ++k) system(i, k) -= w.lower(i, k, 0);
    }
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);

  Eigen::MatrixXd rhs(m, m);
  for (std::size_t step = 1; step <= K; ++step) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double acc = (i == j) ? w.survival(i, step) : 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          if (kernel.p(i, k) == 0.0) continue;
          for (std::size_t l = 1; l <= step; ++l) {
            acc += w.node(i, k, l, 0, step) * phi.at(k, j, step - l);
          }
        }
        rhs(i, j) = acc;
      }
    }
    const Eigen::MatrixXd sol = lu.solve(rhs);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) phi.at(i, j, step) = sol(i, j);
    }
  }
  const double drift = phi.max_row_drift();
  if (drift > kRowDriftLimit) {
    std::ostringstream msg;
    msg << "transition_probabilities: row sums drifted by " << drift;
    throw ConvergenceError(msg.str(), drift);
  }
  return phi;
}

TransitionTable backward_transition_probabilities(const SemiMarkovKernel& kernel, double backward,
                                                  const TransitionTable& phi) {
  const std::size_t m = kernel.size();
  if (phi.states() != m) throw ArgumentError("backward_transition_probabilities: state mismatch");
  const TimeGrid& grid = phi.grid();
  const std::size_t K = grid.intervals();
  const ConvolutionWeights w(kernel, grid.step(), K, backward);
  TransitionTable out(m, grid, backward);
  for (std::size_t step = 0; step <= K; ++step) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double acc = (i == j) ? w.survival(i, step) : 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          if (kernel.p(i, k) == 0.0) continue;
          for (std::size_t l = 0; l <= step; ++l) {
            acc += w.node(i, k, l, 0, step) * phi.at(k, j, step - l);
          }
        }
        out.at(i, j, step) = acc;
      }
    }
  }
  const double drift = out.max_row_drift();
  if (drift > kRowDriftLimit) {
    std::ostringstream msg;
    msg << "backward_transition_probabilities: row sums drifted by " << drift;
    throw ConvergenceError(msg.str(), drift);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Path sampling

std::optional<Transition> sample_transition(const SemiMarkovKernel& kernel, std::size_t state,
                                            RngStream& rng) {
  if (kernel.absorbing(state)) return std::nullopt;
  const std::size_t m = kernel.size();
  const double pick = rng.uniform();
  double cum = 0.0;
  std::size_t next = m;
  for (std::size_t j = 0; j < m; ++j) {
    const double pj = kernel.p(state, j);
    if (pj == 0.0) continue;
    cum += pj;
    next = j;
    if (pick < cum) break;
  }
  const double w = kernel.sojourn(state, next)->quantile(rng.uniform());
  return Transition{next, w};
}

std::optional<Transition> sample_first_transition(const SemiMarkovKernel& kernel,
                                                  const BackwardState& start, RngStream& rng) {
  const std::size_t i = start.state;
  const double u = start.backward;
  if (!(u >= 0.0)) throw ArgumentError("sample_first_transition: backward must be >= 0");
  if (kernel.absorbing(i)) return std::nullopt;
  if (u == 0.0) return sample_transition(kernel, i, rng);

  const double s0 = kernel.survival(i, u);
  if (!(s0 > kDegenerateSurvival)) {
    throw DegenerateConditioningError("sample_first_transition: 1 - H_i(u) is zero");
  }
  // Conditional survival (1 - H(u + w)) / (1 - H(u)) = target.
  const double target = rng.uniform();
  auto cond_survival = [&](double w) { return kernel.survival(i, u + w) / s0; };
  double lo = 0.0;
  double hi = 1.0;
  int expansions = 0;
  while (cond_survival(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 200 || !std::isfinite(hi)) {
      throw RootFindingError("aged sojourn inverse cdf: could not bracket the root", lo, hi);
    }
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (cond_survival(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double w = 0.5 * (lo + hi);
  if (!std::isfinite(w)) {
    throw RootFindingError("aged sojourn inverse cdf: non-finite root", lo, hi);
  }

  const std::size_t m = kernel.size();
  std::vector<double> weights(m, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    weights[k] = kernel.kernel_density(i, k, u + w);
    total += weights[k];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    // Landed on a density edge: fall back to local kernel increments.
    const double t = u + w;
    const double d = 1e-9 * std::max(1.0, t);
    total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      weights[k] = kernel.kernel_cdf(i, k, t + d) - kernel.kernel_cdf(i, k, std::max(0.0, t - d));
      total += weights[k];
    }
    if (!(total > 0.0)) {
      throw RootFindingError("aged sojourn: no kernel mass at the sampled time", lo, hi);
    }
  }
  const double pick = rng.uniform() * total;
  double cum = 0.0;
  std::size_t next = m;
  for (std::size_t k = 0; k < m; ++k) {
    if (weights[k] <= 0.0) continue;
    cum += weights[k];
    next = k;
    if (pick < cum) break;
  }
  return Transition{next, w};
}

std::vector<RenewalRecord> sample_markov_renewal_path(const SemiMarkovKernel& kernel,
                                                      const BackwardState& start, double horizon,
                                                      RngStream& rng) {
  if (!(horizon >= 0.0)) throw ArgumentError("sample_markov_renewal_path: horizon must be >= 0");
  if (start.state >= kernel.size()) {
    throw ArgumentError("sample_markov_renewal_path: start state out of range");
  }
  std::vector<RenewalRecord> path{{start.state, 0.0}};
  if (horizon == 0.0) return path;
  auto next = sample_first_transition(kernel, start, rng);
  double t = 0.0;
  while (next) {
    t += next->sojourn;
    path.push_back({next->next, t});
    if (t >= horizon) break;
    next = sample_transition(kernel, next->next, rng);
  }
  return path;
}

}  // namespace smrate
