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

#include "smrate/moment_engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "smrate/error.hpp"
#include "smrate/quadrature.hpp"
#include "parallel.hpp"

namespace smrate {

std::string_view to_string(Quantity quantity) {
  switch (quantity) {
    case Quantity::ZcbMoment: return "zcb_moment";
    case Quantity::RateMean: return "rate_mean";
    case Quantity::ProductMoment: return "product_moment";
  }
  return "unknown";
}

std::string_view to_string(Coupling coupling) {
  switch (coupling) {
    case Coupling::Joint: return "joint";
    case Coupling::Factorized: return "factorized";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Rate grid

RateGrid::RateGrid(double lower, double upper, std::size_t nodes)
    : lower_(lower), upper_(upper), n_(nodes) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(upper > lower)) {
    throw ArgumentError("rate grid: need finite lower < upper");
  }
  if (nodes < 2) throw ArgumentError("rate grid: need at least 2 nodes");
  dx_ = (upper - lower) / static_cast<double>(nodes - 1);
}

bool RateGrid::contains(double r) const noexcept {
  const double slack = 1e-12 * (upper_ - lower_);
  return r >= lower_ - slack && r <= upper_ + slack;
}

bool RateGrid::operator==(const RateGrid& other) const noexcept {
  return lower_ == other.lower_ && upper_ == other.upper_ && n_ == other.n_;
}

RateGrid make_rate_grid(const RateModel& model, const RateGridSpec& spec) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  if (!spec.lower || !spec.upper) {
    for (std::size_t i = 0; i < model.size(); ++i) {
      const auto st = model.regime(i).stationary();
      if (!st) {
        throw ArgumentError("rate grid: regime " + std::to_string(i + 1) +
                            " has no stationary law; give solver.rate_grid.lower and upper");
      }
      const double sd = std::sqrt(st->second);
      lo = std::min(lo, st->first - 6.0 * sd);
      hi = std::max(hi, st->first + 6.0 * sd);
    }
    if (hi - lo < 1e-8) {
      lo -= 0.01;
      hi += 0.01;
    }
    if (model.kind() == ModelKind::Cir) lo = std::max(lo, 0.0);
  }
  if (spec.lower) lo = *spec.lower;
  if (spec.upper) hi = *spec.upper;
  return RateGrid(lo, hi, spec.nodes);
}

// ---------------------------------------------------------------------------
// Surface data

namespace detail {

/// One quadrature node folded into the lattice: weight a on value p and
/// weight b on value p + 1.
struct RuleEntry {
  std::int32_t p;
  double a;
  double b;
};

struct SurfaceData {
  SurfaceData(Quantity q, const SemiMarkovKernel& kern, const RateModel& mod,
              const SolverConfig& cfg, TimeGrid tg, RateGrid rg)
      : quantity(q), kernel(kern), model(mod), config(cfg), grid(tg), rates(rg) {}

  Quantity quantity;
  int n = 0;
  double lag = 0.0;
  std::size_t lag_steps = 0;
  SemiMarkovKernel kernel;
  RateModel model;
  SolverConfig config;
  TimeGrid grid;
  RateGrid rates;
  std::size_t m = 0;
  std::size_t width = 0;       // nodes per rule
  std::size_t rule_steps = 0;  // rules exist for theta_l, l = 1..rule_steps
  double tilt = 0.0;
  bool discount = false;
  /// Rules [((i * rule_steps + l - 1) * N + p) * width + q].
  std::vector<RuleEntry> rules;
  /// No-switch term without the survival factor, [(k * m + i) * N + p].
  std::vector<double> core;
  std::vector<double> values;
  /// Gaussian coefficients per regime at t_k, k = 0..K + lag_steps.
  std::vector<std::vector<GaussianCoefficients>> coef;
  /// Mid-window table G[((i * m + j) * (P + 1) + pp) * N + p] for
  /// time-homogeneous regimes (ProductMoment, joint coupling).
  std::vector<double> mid_table;
  bool mid_table_static = false;
  std::shared_ptr<const MomentSurface> rate_mean;
  SurfaceDiagnostics diag;

  std::size_t N() const { return rates.nodes(); }
  std::size_t K() const { return grid.intervals(); }
  double t(std::size_t k) const { return grid.at(k); }
  const RuleEntry* rule(std::size_t i, std::size_t l, std::size_t p) const {
    return &rules[((i * rule_steps + l - 1) * N() + p) * width];
  }
  double value(std::size_t k, std::size_t i, std::size_t p) const {
    return values[(k * m + i) * N() + p];
  }
};

}  // namespace detail

using detail::RuleEntry;
using detail::SurfaceData;

namespace {

using detail::for_each_index;

bool parallel(const SurfaceData& d) { return d.config.execution == Execution::Parallel; }

// --- per-regime law evaluation on the time lattice -------------------------

const GaussianCoefficients* coefficients(const SurfaceData& d, std::size_t i, std::size_t k) {
  if (d.coef[i].empty()) return nullptr;
  return &d.coef[i][k];
}

TransitionLaw law_at(const SurfaceData& d, std::size_t i, double x, std::size_t k, double tilt) {
  if (const auto* c = coefficients(d, i, k)) return GaussianRegime::law_from(*c, x, tilt);
  return d.model.regime(i).law(x, d.t(k), tilt);
}

/// Law of r(t_{k+p}) given r(t_k) = z within one regime segment.
TransitionLaw conditional_law(const SurfaceData& d, std::size_t i, double z, std::size_t k,
                              std::size_t p) {
  if (const auto* c0 = coefficients(d, i, k)) {
    const auto& c1 = d.coef[i][k + p];
    const double ratio = c1.slope / c0->slope;
    TransitionLaw law;
    law.mean = ratio * z + c1.offset - ratio * c0->offset;
    law.variance = std::max(0.0, c1.variance - ratio * ratio * c0->variance);
    law.shape = law.variance > 0.0 ? TransitionLaw::Shape::Gaussian : TransitionLaw::Shape::Point;
    return law;
  }
  return d.model.regime(i).law(z, d.t(p), 0.0);
}

double bond_at(const SurfaceData& d, std::size_t i, double x, std::size_t k) {
  if (const auto* c = coefficients(d, i, k)) return GaussianRegime::bond_from(*c, x, d.n);
  return d.model.regime(i).bond_laplace(x, d.n, d.t(k));
}

double mean_at(const SurfaceData& d, std::size_t i, double x, std::size_t k) {
  if (const auto* c = coefficients(d, i, k)) return c->slope * x + c->offset;
  return d.model.regime(i).mean(x, d.t(k));
}

double product_at(const SurfaceData& d, std::size_t i, double x, std::size_t k) {
  if (const auto* c = coefficients(d, i, k)) {
    return GaussianRegime::product_from(*c, d.coef[i][k + d.lag_steps], x);
  }
  return d.model.regime(i).product_mean(x, d.t(k), d.lag);
}

// --- quadrature rules folded onto the rate lattice ---------------------------

struct RuleStats {
  std::size_t reduced = 0;
  double escape = 0.0;
};

/// Writes d.width entries approximating scale * E[f(Y)], Y ~ law, for f
/// linearly interpolated on the rate grid.
void fill_rule(const SurfaceData& d, const TransitionLaw& law, double scale, RuleEntry* out,
               RuleStats& stats) {
  const RateGrid& g = d.rates;
  const std::size_t N = g.nodes();
  const double span = g.upper() - g.lower();
  std::size_t used = 0;
  auto put = [&](double y, double w) {
    const double pos = (y - g.lower()) / g.spacing();
    const double escape = std::max({0.0, g.lower() - y, y - g.upper()}) / span;
    if (escape > d.config.coverage_tolerance) {
      std::ostringstream msg;
      msg << "rate grid [" << g.lower() << ", " << g.upper() << "] too narrow: quadrature node "
          << y << " lies " << escape << " grid widths outside (tolerance "
          << d.config.coverage_tolerance << ")";
      throw GridCoverageError(msg.str());
    }
    stats.escape = std::max(stats.escape, escape);
    const auto p = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(pos)), 0,
                                              static_cast<std::ptrdiff_t>(N) - 2);
    const double f = pos - static_cast<double>(p);
    out[used++] = RuleEntry{static_cast<std::int32_t>(p), scale * w * (1.0 - f), scale * w * f};
  };
  const int order = d.config.quadrature_order;
  if (law.shape == TransitionLaw::Shape::Point || !(law.variance > 0.0) || order == 1) {
    put(law.mean, 1.0);
  } else if (law.shape == TransitionLaw::Shape::Gaussian) {
    const auto& gh = numerics::gauss_hermite(order);
    const double sd = std::sqrt(law.variance);
    for (std::size_t q = 0; q < gh.nodes.size(); ++q) put(law.mean + sd * gh.nodes[q], gh.weights[q]);
  } else {
    const RateQuadrature rq = quadrature_for_law(law, order);
    if (rq.reduced_order) ++stats.reduced;
    for (std::size_t q = 0; q < rq.nodes.size(); ++q) put(rq.nodes[q], rq.weights[q]);
  }
  for (; used < d.width; ++used) out[used] = RuleEntry{0, 0.0, 0.0};
}

double apply_rule(const RuleEntry* rule, std::size_t width, const double* f) {
  double s = 0.0;
  for (std::size_t q = 0; q < width; ++q) s += rule[q].a * f[rule[q].p] + rule[q].b * f[rule[q].p + 1];
  return s;
}

// --- setup -------------------------------------------------------------------

void validate_inputs(const SemiMarkovKernel& kernel, const RateModel& model,
                     const SolverConfig& config) {
  if (kernel.size() != model.size()) {
    throw ArgumentError("solver: kernel has " + std::to_string(kernel.size()) +
                        " states but the rate model has " + std::to_string(model.size()));
  }
  if (!(config.step > 0.0) || !std::isfinite(config.step)) {
    throw ArgumentError("solver: step must be > 0");
  }
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
    throw ArgumentError("solver: horizon must be > 0");
  }
  if (config.quadrature_order < 1 || config.quadrature_order > numerics::kMaxTabulatedOrder) {
    throw ArgumentError("solver: quadrature_order must lie in [1, 64]");
  }
  if (!(config.coverage_tolerance >= 0.0)) {
    throw ArgumentError("solver: coverage_tolerance must be >= 0");
  }
}

std::size_t lag_steps(double lag, double step) {
  if (!(lag >= 0.0) || !std::isfinite(lag)) throw ArgumentError("product moment: lag must be >= 0");
  const double ratio = lag / step;
  const double rounded = std::round(ratio);
  if (std::fabs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ArgumentError("product moment: lag must be a multiple of the time step");
  }
  return static_cast<std::size_t>(rounded);
}

std::shared_ptr<SurfaceData> make_data(Quantity quantity, const SemiMarkovKernel& kernel,
                                       const RateModel& model, const SolverConfig& config,
                                       std::size_t extra_steps) {
  validate_inputs(kernel, model, config);
  TimeGrid grid(config.step, config.horizon);
  RateGrid rates = make_rate_grid(model, config.rate_grid);
  auto d = std::make_shared<SurfaceData>(quantity, kernel, model, config, grid, rates);
  d->m = kernel.size();
  d->width = static_cast<std::size_t>(config.quadrature_order);
  d->lag_steps = extra_steps;
  d->coef.resize(d->m);
  const std::size_t T = grid.intervals() + extra_steps;
  for (std::size_t i = 0; i < d->m; ++i) {
    const auto* g = dynamic_cast<const GaussianRegime*>(&model.regime(i));
    if (g == nullptr) continue;
    d->coef[i].resize(T + 1);
    auto& c = d->coef[i];
    for_each_index(T + 1, parallel(*d),
                   [&](std::size_t k) { c[k] = g->coefficients(config.step * static_cast<double>(k)); });
  }
  d->diag.quadrature_order = config.quadrature_order;
  d->diag.lattice_points = d->m * grid.nodes() * rates.nodes();
  return d;
}

void build_rules(SurfaceData& d, std::size_t steps) {
  const std::size_t N = d.N();
  d.rule_steps = steps;
  d.rules.assign(d.m * steps * N * d.width, RuleEntry{0, 0.0, 0.0});
  const std::size_t total = d.m * steps * N;
  std::vector<RuleStats> stats(total);
  for_each_index(total, parallel(d), [&](std::size_t idx) {
    const std::size_t p = idx % N;
    const std::size_t l = (idx / N) % steps + 1;
    const std::size_t i = idx / (N * steps);
    const double x = d.rates.at(p);
    const double scale = d.discount ? bond_at(d, i, x, l) : 1.0;
    fill_rule(d, law_at(d, i, x, l, d.tilt), scale, &d.rules[idx * d.width], stats[idx]);
  });
  for (const auto& s : stats) {
    d.diag.reduced_order_rules += s.reduced;
    d.diag.max_escape = std::max(d.diag.max_escape, s.escape);
  }
}

void build_core(SurfaceData& d) {
  const std::size_t N = d.N();
  const std::size_t K = d.K();
  d.core.assign((K + 1) * d.m * N, 0.0);
  for_each_index((K + 1) * d.m, parallel(d), [&](std::size_t row) {
    const std::size_t k = row / d.m;
    const std::size_t i = row % d.m;
    for (std::size_t p = 0; p < N; ++p) {
      const double x = d.rates.at(p);
      double v = 0.0;
      switch (d.quantity) {
        case Quantity::ZcbMoment: v = bond_at(d, i, x, k); break;
        case Quantity::RateMean: v = mean_at(d, i, x, k); break;
        case Quantity::ProductMoment: v = product_at(d, i, x, k); break;
      }
      d.core[row * N + p] = v;
    }
  });
}

// --- mid-window term of the product moment --------------------------------

/// G_ij(k, pp, z_p) = E[R_j(r(t_{k+pp}), t_{P-pp}) | r(t_k) = z_p] within
/// regime i, written to out[((i * m + j) * (P + 1) + pp) * N + p].
void mid_table(const SurfaceData& d, std::size_t k, std::vector<double>& out, bool par) {
  const std::size_t N = d.N();
  const std::size_t P = d.lag_steps;
  const std::size_t m = d.m;
  const auto& R = d.rate_mean->data();
  out.assign(m * m * (P + 1) * N, 0.0);
  const std::size_t rows = m * (P + 1) * N;
  std::vector<RuleStats> stats(rows);
  for_each_index(rows, par, [&](std::size_t idx) {
    const std::size_t p = idx % N;
    const std::size_t pp = (idx / N) % (P + 1);
    const std::size_t i = idx / (N * (P + 1));
    std::vector<RuleEntry> rule(d.width);
    fill_rule(d, conditional_law(d, i, d.rates.at(p), k, pp), 1.0, rule.data(), stats[idx]);
    for (std::size_t j = 0; j < m; ++j) {
      const double* f = &R.values[((P - pp) * m + j) * N];
      out[((i * m + j) * (P + 1) + pp) * N + p] = apply_rule(rule.data(), d.width, f);
    }
  });
}

/// Mid-window term at time index k for every rate node of regime i, with
/// the kernel measure given by `w` (cells >= K + P).
std::vector<double> mid_values(const SurfaceData& d, const ConvolutionWeights& w, std::size_t i,
                               std::size_t k, const std::vector<double>& G) {
  const std::size_t N = d.N();
  const std::size_t P = d.lag_steps;
  const std::size_t m = d.m;
  std::vector<double> mid(N, 0.0);
  if (P == 0) return mid;
  if (d.config.coupling == Coupling::Joint) {
    std::vector<double> D(N, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t pp = 0; pp <= P; ++pp) {
        const double c = w.node(i, j, k + pp, k, k + P);
        if (c == 0.0) continue;
        const double* g = &G[((i * m + j) * (P + 1) + pp) * N];
        for (std::size_t p = 0; p < N; ++p) D[p] += c * g[p];
      }
    }
    // E[z D(z)] over the law of r(t_k) started at x_p.
    std::vector<RuleEntry> rule(d.width);
    for (std::size_t p = 0; p < N; ++p) {
      const double x = d.rates.at(p);
      if (k == 0) {
        mid[p] = x * D[p];
        continue;
      }
      RuleStats stats;
      fill_rule(d, law_at(d, i, x, k, 0.0), 1.0, rule.data(), stats);
      double acc = 0.0;
      for (std::size_t q = 0; q < d.width; ++q) {
        const auto& e = rule[q];
        const double wq = e.a + e.b;
        if (wq == 0.0) continue;
        const double z = d.rates.at(static_cast<std::size_t>(e.p)) + (e.b / wq) * d.rates.spacing();
        acc += z * (e.a * D[e.p] + e.b * D[e.p + 1]);
      }
      mid[p] = acc;
    }
    return mid;
  }
  // Factorized: m_i(x, s) * sum_j sum_pp c * E[R_j(r(t_{k+pp}), t_{P-pp})].
  const auto& R = d.rate_mean->data();
  for (std::size_t p = 0; p < N; ++p) {
    const double x = d.rates.at(p);
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t pp = 0; pp <= P; ++pp) {
        const double c = w.node(i, j, k + pp, k, k + P);
        if (c == 0.0) continue;
        const double* f = &R.values[((P - pp) * m + j) * N];
        const std::size_t l = k + pp;
        const double e = (l == 0) ? f[p] : apply_rule(d.rule(i, l, p), d.width, f);
        acc += c * e;
      }
    }
    mid[p] = mean_at(d, i, x, k) * acc;
  }
  return mid;
}

const std::vector<double>& mid_table_for(const SurfaceData& d, std::size_t k,
                                         std::vector<double>& scratch, bool par) {
  if (d.config.coupling != Coupling::Joint) return scratch;
  if (d.mid_table_static) return d.mid_table;
  mid_table(d, k, scratch, par);
  return scratch;
}

// --- march -------------------------------------------------------------------

void march(SurfaceData& d, const ConvolutionWeights& w, const std::vector<double>& extra) {
  const std::size_t N = d.N();
  const std::size_t K = d.K();
  const std::size_t m = d.m;
  const std::size_t so = d.quantity == Quantity::ProductMoment ? d.lag_steps : 0;
  d.values.assign((K + 1) * m * N, 0.0);
  auto forcing = [&](std::size_t k, std::size_t i, std::size_t p) {
    const std::size_t idx = (k * m + i) * N + p;
    return w.survival(i, k + so) * d.core[idx] + (extra.empty() ? 0.0 : extra[idx]);
  };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < N; ++p) d.values[i * N + p] = forcing(0, i, p);
  }
  // The value at s itself enters through theta = 0, where the transition
  // law is a point mass at x: an m x m linear system per rate node.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m),
                                                static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -= w.lower(i, j, 0);
    }
  }
  const Eigen::MatrixXd inv = A.partialPivLu().inverse();
  for (std::size_t k = 1; k <= K; ++k) {
    for_each_index(N, parallel(d), [&](std::size_t p) {
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        double acc = forcing(k, i, p);
        for (std::size_t l = 1; l <= k; ++l) {
          const RuleEntry* rule = d.rule(i, l, p);
          const double* U = &d.values[(k - l) * m * N];
          for (std::size_t j = 0; j < m; ++j) {
            const double c = w.node(i, j, l, 0, k);
            if (c == 0.0) continue;
            acc += c * apply_rule(rule, d.width, U + j * N);
          }
        }
        rhs[static_cast<Eigen::Index>(i)] = acc;
      }
      const Eigen::VectorXd v = inv * rhs;
      for (std::size_t i = 0; i < m; ++i) {
        d.values[(k * m + i) * N + p] = v[static_cast<Eigen::Index>(i)];
      }
    });
  }
  for (double v : d.values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("solver: non-finite value in ") +
                         std::string(to_string(d.quantity)) + " surface");
    }
  }
}

MomentSurface finish(std::shared_ptr<SurfaceData> d) {
  return MomentSurface(std::shared_ptr<const SurfaceData>(std::move(d)));
}

}  // namespace

// ---------------------------------------------------------------------------
// MomentSurface

MomentSurface::MomentSurface(std::shared_ptr<const detail::SurfaceData> data)
    : data_(std::move(data)) {
  if (!data_) throw ArgumentError("moment surface: null data");
}

Quantity MomentSurface::quantity() const { return data_->quantity; }
int MomentSurface::order() const { return data_->n; }
double MomentSurface::lag() const { return data_->lag; }
std::size_t MomentSurface::states() const { return data_->m; }
const TimeGrid& MomentSurface::time_grid() const { return data_->grid; }
const RateGrid& MomentSurface::rate_grid() const { return data_->rates; }
const SolverConfig& MomentSurface::config() const { return data_->config; }
const SurfaceDiagnostics& MomentSurface::diagnostics() const { return data_->diag; }

double MomentSurface::value(std::size_t i, std::size_t k, std::size_t p) const {
  if (i >= data_->m || k > data_->K() || p >= data_->N()) {
    throw ArgumentError("moment surface: lattice index out of range");
  }
  return data_->value(k, i, p);
}

std::span<const double> MomentSurface::values() const { return data_->values; }

namespace {

struct Bracket {
  std::size_t k;
  double fs;
  std::size_t p;
  double fr;
};

Bracket bracket(const SurfaceData& d, double s, double r) {
  if (!d.rates.contains(r)) {
    std::ostringstream msg;
    msg << "rate " << r << " outside the solver grid [" << d.rates.lower() << ", "
        << d.rates.upper() << "]";
    throw GridCoverageError(msg.str());
  }
  const double S = d.grid.horizon();
  if (!(s >= 0.0) || s > S * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time " << s << " outside the solver horizon [0, " << S << "]";
    throw ArgumentError(msg.str());
  }
  Bracket b{};
  const double ks = std::min(s / d.grid.step(), static_cast<double>(d.K()));
  b.k = std::min(static_cast<std::size_t>(std::floor(ks)), d.K() - 1);
  b.fs = ks - static_cast<double>(b.k);
  const double pr = std::clamp((r - d.rates.lower()) / d.rates.spacing(), 0.0,
                               static_cast<double>(d.N() - 1));
  b.p = std::min(static_cast<std::size_t>(std::floor(pr)), d.N() - 2);
  b.fr = pr - static_cast<double>(b.p);
  return b;
}

template <class F>
double bilinear(const Bracket& b, F&& f) {
  double out = 0.0;
  for (int dk = 0; dk < 2; ++dk) {
    const double wk = dk == 0 ? 1.0 - b.fs : b.fs;
    if (wk == 0.0) continue;
    for (int dp = 0; dp < 2; ++dp) {
      const double wp = dp == 0 ? 1.0 - b.fr : b.fr;
      if (wp == 0.0) continue;
      out += wk * wp * f(b.k + static_cast<std::size_t>(dk), b.p + static_cast<std::size_t>(dp));
    }
  }
  return out;
}

}  // namespace

double MomentSurface::interpolate(std::size_t i, double s, double r) const {
  if (i >= data_->m) throw ArgumentError("moment surface: state index out of range");
  const Bracket b = bracket(*data_, s, r);
  return bilinear(b, [&](std::size_t k, std::size_t p) { return data_->value(k, i, p); });
}

// ---------------------------------------------------------------------------
// Solvers

MomentSurface solve_zcb_moment(int n, const SemiMarkovKernel& kernel, const RateModel& model,
                               const SolverConfig& config) {
  if (n < 1) throw ArgumentError("solve_zcb_moment: n must be >= 1");
  auto d = make_data(Quantity::ZcbMoment, kernel, model, config, 0);
  d->n = n;
  d->tilt = static_cast<double>(n);
  d->discount = true;
  const ConvolutionWeights w(kernel, config.step, d->K());
  build_core(*d);
  build_rules(*d, d->K());
  march(*d, w, {});
  return finish(std::move(d));
}

MomentSurface solve_rate_mean(const SemiMarkovKernel& kernel, const RateModel& model,
                              const SolverConfig& config) {
  auto d = make_data(Quantity::RateMean, kernel, model, config, 0);
  const ConvolutionWeights w(kernel, config.step, d->K());
  build_core(*d);
  build_rules(*d, d->K());
  march(*d, w, {});
  return finish(std::move(d));
}

MomentSurface solve_product_moment(double lag, const SemiMarkovKernel& kernel,
                                   const RateModel& model, const SolverConfig& config,
                                   std::shared_ptr<const MomentSurface> rate_mean) {
  if (!rate_mean) throw DependencyError("solve_product_moment: rate-mean surface missing");
  if (rate_mean->quantity() != Quantity::RateMean) {
    throw DependencyError("solve_product_moment: dependency is not a rate-mean surface");
  }
  validate_inputs(kernel, model, config);
  const std::size_t P = lag_steps(lag, config.step);
  auto d = make_data(Quantity::ProductMoment, kernel, model, config, P);
  d->lag = lag;
  const auto& R = rate_mean->data();
  if (R.grid.step() != d->grid.step() || !(R.rates == d->rates) || R.m != d->m) {
    throw DependencyError("solve_product_moment: rate-mean surface lies on a different lattice");
  }
  if (R.K() < d->K() + P) {
    throw DependencyError(
        "solve_product_moment: rate-mean surface horizon must cover horizon + lag");
  }
  d->rate_mean = rate_mean;
  const std::size_t K = d->K();
  const std::size_t N = d->N();
  const ConvolutionWeights w(kernel, config.step, K + P);
  build_core(*d);
  build_rules(*d, K + P);

  d->mid_table_static = model.kind() != ModelKind::HullWhite;
  if (config.coupling == Coupling::Joint && d->mid_table_static) {
    mid_table(*d, 0, d->mid_table, parallel(*d));
  }
  std::vector<double> extra((K + 1) * d->m * N, 0.0);
  if (P > 0) {
    const bool inner_parallel = !d->mid_table_static;
    for_each_index((K + 1) * d->m, parallel(*d) && !inner_parallel, [&](std::size_t row) {
      const std::size_t k = row / d->m;
      const std::size_t i = row % d->m;
      std::vector<double> scratch;
      const auto& G = mid_table_for(*d, k, scratch, inner_parallel && parallel(*d));
      const auto mid = mid_values(*d, w, i, k, G);
      std::copy(mid.begin(), mid.end(), extra.begin() + static_cast<std::ptrdiff_t>(row * N));
    });
  }
  march(*d, w, extra);
  return finish(std::move(d));
}

// ---------------------------------------------------------------------------
// Evaluation at arbitrary backward time

namespace {

void check_evaluation(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                      const RateModel& model, std::size_t i, double u) {
  if (kernel.size() != surface.states() || model.size() != surface.states()) {
    throw ArgumentError("evaluate: kernel/model state count differs from the surface");
  }
  if (i >= surface.states()) throw ArgumentError("evaluate: state index out of range");
  if (!(u >= 0.0) || !std::isfinite(u)) throw ArgumentError("evaluate: backward must be >= 0");
}

/// Right-hand side of the renewal equation at lattice point (k, x_p) with
/// backward-conditioned kernel weights.
double front_end(const SurfaceData& d, const ConvolutionWeights& w, std::size_t i,
                 std::size_t k, std::size_t p, double mid) {
  const std::size_t N = d.N();
  const std::size_t m = d.m;
  const std::size_t so = d.quantity == Quantity::ProductMoment ? d.lag_steps : 0;
  double acc = w.survival(i, k + so) * d.core[(k * m + i) * N + p] + mid;
  for (std::size_t j = 0; j < m; ++j) {
    acc += w.node(i, j, 0, 0, k) * d.value(k, j, p);
  }
  for (std::size_t l = 1; l <= k; ++l) {
    const RuleEntry* rule = d.rule(i, l, p);
    const double* U = &d.values[(k - l) * m * N];
    for (std::size_t j = 0; j < m; ++j) {
      const double c = w.node(i, j, l, 0, k);
      if (c == 0.0) continue;
      acc += c * apply_rule(rule, d.width, U + j * N);
    }
  }
  return acc;
}

}  // namespace

double evaluate(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                const RateModel& model, std::size_t i, double u, double r, double s) {
  check_evaluation(surface, kernel, model, i, u);
  const SurfaceData& d = surface.data();
  const Bracket b = bracket(d, s, r);
  const std::size_t P = d.quantity == Quantity::ProductMoment ? d.lag_steps : 0;
  const std::size_t last = b.fs > 0.0 ? b.k + 1 : b.k;
  const ConvolutionWeights w(kernel, d.grid.step(), last + P, u);
  std::vector<double> mids[2];
  if (P > 0) {
    for (std::size_t k = b.k; k <= last; ++k) {
      std::vector<double> scratch;
      const auto& G = mid_table_for(d, k, scratch, false);
      mids[k - b.k] = mid_values(d, w, i, k, G);
    }
  }
  return bilinear(b, [&](std::size_t k, std::size_t p) {
    const double mid = P > 0 ? mids[k - b.k][p] : 0.0;
    return front_end(d, w, i, k, p, mid);
  });
}

double evaluate_zcb_moment(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                           const RateModel& model, std::size_t i, double u, double r, double s) {
  if (surface.quantity() != Quantity::ZcbMoment) {
    throw ArgumentError("evaluate_zcb_moment: surface holds " +
                        std::string(to_string(surface.quantity())));
  }
  return evaluate(surface, kernel, model, i, u, r, s);
}

double evaluate_rate_mean(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                          const RateModel& model, std::size_t i, double u, double r, double s) {
  if (surface.quantity() != Quantity::RateMean) {
    throw ArgumentError("evaluate_rate_mean: surface holds " +
                        std::string(to_string(surface.quantity())));
  }
  return evaluate(surface, kernel, model, i, u, r, s);
}

double evaluate_product_moment(const MomentSurface& surface, const SemiMarkovKernel& kernel,
                               const RateModel& model, std::size_t i, double u, double r,
                               double s) {
  if (surface.quantity() != Quantity::ProductMoment) {
    throw ArgumentError("evaluate_product_moment: surface holds " +
                        std::string(to_string(surface.quantity())));
  }
  return evaluate(surface, kernel, model, i, u, r, s);
}

double covariance(const MomentSurface& product, const MomentSurface& rate_mean, std::size_t i,
                  double u, double r, double s, double h) {
  if (product.quantity() != Quantity::ProductMoment || rate_mean.quantity() != Quantity::RateMean) {
    throw ArgumentError("covariance: expects a product-moment and a rate-mean surface");
  }
  if (std::fabs(h - product.lag()) > 1e-9 * std::max(1.0, h)) {
    std::ostringstream msg;
    msg << "covariance: lag " << h << " differs from the product surface lag " << product.lag();
    throw ArgumentError(msg.str());
  }
  if (product.time_grid().step() != rate_mean.time_grid().step() ||
      !(product.rate_grid() == rate_mean.rate_grid()) || product.states() != rate_mean.states()) {
    throw ArgumentError("covariance: surfaces lie on different lattices");
  }
  const auto& d = product.data();
  const double xi = evaluate(product, d.kernel, d.model, i, u, r, s);
  const double r_s = evaluate(rate_mean, d.kernel, d.model, i, u, r, s);
  const double r_sh = evaluate(rate_mean, d.kernel, d.model, i, u, r, s + h);
  const double cov = xi - r_s * r_sh;
  if (h == 0.0 && cov < -d.config.consistency_tolerance) {
    std::ostringstream msg;
    msg << "covariance: variance " << cov << " below -" << d.config.consistency_tolerance;
    throw NumericError(msg.str());
  }
  return cov;
}

}  // namespace smrate
