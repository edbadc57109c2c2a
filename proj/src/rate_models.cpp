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

#include "smrate/rate_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "smrate/error.hpp"
#include "smrate/quadrature.hpp"

namespace smrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonnegative_time(double t, const char* what) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw ArgumentError(std::string(what) + ": time must be finite and >= 0");
  }
}

/// (1 - e^{-x t}) / x, with the x -> 0 limit t.
double decay_integral(double x, double t) {
  const double y = x * t;
  if (std::fabs(y) < 1e-12) return t * (1.0 - 0.5 * y);
  return -std::expm1(-y) / x;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Vasicek: return "vasicek";
    case ModelKind::HullWhite: return "hull_white";
    case ModelKind::Cir: return "cir";
  }
  return "unknown";
}

double CirParams::feller_ratio() const {
  if (sigma == 0.0) return kInf;
  return 2.0 * a / (sigma * sigma);
}

// ---------------------------------------------------------------------------
// PiecewiseLinear

PiecewiseLinear::PiecewiseLinear(std::vector<std::pair<double, double>> knots)
    : knots_(std::move(knots)) {
  if (knots_.empty()) throw ArgumentError("piecewise-linear table: no knots");
  if (knots_.front().first != 0.0) {
    throw ArgumentError("piecewise-linear table: first knot must be at t = 0");
  }
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    if (!std::isfinite(knots_[k].first) || !std::isfinite(knots_[k].second)) {
      throw ArgumentError("piecewise-linear table: non-finite knot");
    }
    if (k > 0 && !(knots_[k].first > knots_[k - 1].first)) {
      throw ArgumentError("piecewise-linear table: knot times must increase strictly");
    }
  }
  if (knots_.size() == 1) {
    throw ArgumentError("piecewise-linear table: need at least two knots");
  }
  cumulative_.assign(knots_.size(), 0.0);
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    const double dt = knots_[k].first - knots_[k - 1].first;
    cumulative_[k] = cumulative_[k - 1] + 0.5 * (knots_[k].second + knots_[k - 1].second) * dt;
  }
}

PiecewiseLinear PiecewiseLinear::constant(double value, double horizon) {
  return PiecewiseLinear({{0.0, value}, {horizon, value}});
}

std::size_t PiecewiseLinear::segment(double t) const {
  if (t < 0.0 || t > horizon() * (1.0 + 1e-12) + 1e-15) {
    std::ostringstream msg;
    msg << "piecewise-linear table: t = " << t << " outside [0, " << horizon() << "]";
    throw ArgumentError(msg.str());
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double x, const auto& knot) { return x < knot.first; });
  const auto idx = static_cast<std::size_t>(std::distance(knots_.begin(), it));
  return std::clamp<std::size_t>(idx, 1, knots_.size() - 1) - 1;
}

double PiecewiseLinear::operator()(double t) const {
  const std::size_t s = segment(t);
  const auto& [t0, v0] = knots_[s];
  const auto& [t1, v1] = knots_[s + 1];
  return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

double PiecewiseLinear::integral(double t) const {
  const std::size_t s = segment(t);
  const auto& [t0, v0] = knots_[s];
  const auto& [t1, v1] = knots_[s + 1];
  const double dt = t - t0;
  const double slope = (v1 - v0) / (t1 - t0);
  return cumulative_[s] + v0 * dt + 0.5 * slope * dt * dt;
}

// ---------------------------------------------------------------------------
// GaussianRegime

double GaussianRegime::mean(double r0, double t) const {
  require_nonnegative_time(t, "transition_mean");
  const auto c = coefficients(t);
  return c.slope * r0 + c.offset;
}

double GaussianRegime::variance(double /*r0*/, double t) const {
  require_nonnegative_time(t, "transition_variance");
  return coefficients(t).variance;
}

double GaussianRegime::integrated_mean(double r0, double s) const {
  require_nonnegative_time(s, "integrated_mean");
  const auto c = coefficients(s);
  return c.int_slope * r0 + c.int_offset;
}

double GaussianRegime::integrated_variance(double /*r0*/, double s) const {
  require_nonnegative_time(s, "integrated_variance");
  return coefficients(s).int_variance;
}

double GaussianRegime::bond_from(const GaussianCoefficients& c, double r0, int n) {
  const double mean = c.int_slope * r0 + c.int_offset;
  const double nn = static_cast<double>(n);
  return std::exp(-nn * mean + 0.5 * nn * nn * c.int_variance);
}

TransitionLaw GaussianRegime::law_from(const GaussianCoefficients& c, double r0, double tilt) {
  TransitionLaw law;
  // Tilting a jointly Gaussian pair (int r, r(t)) by exp(-n int r) shifts
  // the mean of r(t) by -n Cov(int r, r(t)) and keeps its variance.
  law.mean = c.slope * r0 + c.offset - tilt * c.cross;
  law.variance = c.variance;
  law.shape = c.variance > 0.0 ? TransitionLaw::Shape::Gaussian : TransitionLaw::Shape::Point;
  return law;
}

double GaussianRegime::product_from(const GaussianCoefficients& cs,
                                    const GaussianCoefficients& ch, double r0) {
  const double ms = cs.slope * r0 + cs.offset;
  const double mh = ch.slope * r0 + ch.offset;
  // Cov(r(s), r(s+h)) = exp(-(k(s+h) - k(s))) Var r(s).
  return ms * mh + (ch.slope / cs.slope) * cs.variance;
}

double GaussianRegime::bond_laplace(double r0, int n, double s) const {
  if (n < 1) throw ArgumentError("bond_laplace: order n must be >= 1");
  require_nonnegative_time(s, "bond_laplace");
  const double value = bond_from(coefficients(s), r0, n);
  if (std::isnan(value)) throw NumericError("bond_laplace: NaN");
  return value;
}

double GaussianRegime::product_mean(double r0, double s, double h) const {
  require_nonnegative_time(s, "product_mean");
  require_nonnegative_time(h, "product_mean");
  return product_from(coefficients(s), coefficients(s + h), r0);
}

TransitionLaw GaussianRegime::law(double r0, double t, double tilt) const {
  require_nonnegative_time(t, "transition law");
  return law_from(coefficients(t), r0, tilt);
}

double GaussianRegime::exact_step(double r, double clock, double dt, RngStream& rng,
                                  bool antithetic) const {
  if (!(dt > 0.0)) throw ArgumentError("exact_step: dt must be > 0");
  const auto [m, v] = transition(r, clock, dt);
  double z = rng.normal();
  if (antithetic) z = -z;
  return m + std::sqrt(v) * z;
}

// ---------------------------------------------------------------------------
// Vasicek

VasicekRegime::VasicekRegime(VasicekParams params) : p_(params) {
  if (!(p_.a > 0.0) || !std::isfinite(p_.a)) throw ArgumentError("vasicek: a must be > 0");
  if (!(p_.sigma >= 0.0) || !std::isfinite(p_.sigma)) {
    throw ArgumentError("vasicek: sigma must be >= 0");
  }
  if (!std::isfinite(p_.b)) throw ArgumentError("vasicek: b must be finite");
}

GaussianCoefficients VasicekRegime::coefficients(double t) const {
  const double a = p_.a;
  const double b = p_.b;
  const double s2 = p_.sigma * p_.sigma;
  const double x = a * t;
  const double om = -std::expm1(-x);  // 1 - e^{-at}
  GaussianCoefficients c;
  c.slope = std::exp(-x);
  c.offset = b * om;
  c.variance = s2 / (2.0 * a) * (-std::expm1(-2.0 * x));
  c.int_slope = om / a;
  c.int_offset = b * (x - om) / a;
  // sigma^2/a^3 [x - 2(1 - e^{-x}) + (1 - e^{-2x})/2]
  double bracket;
  if (x < 1e-4) {
    bracket = x * x * x * (1.0 / 3.0 - x / 4.0 + 7.0 * x * x / 60.0);
  } else {
    bracket = x - om - 0.5 * om * om;
  }
  c.int_variance = s2 / (a * a * a) * bracket;
  c.cross = s2 / (2.0 * a * a) * om * om;
  return c;
}

std::pair<double, double> VasicekRegime::transition(double r, double /*clock*/,
                                                    double dt) const {
  const double a = p_.a;
  const double mean = p_.b + (r - p_.b) * std::exp(-a * dt);
  const double var = p_.sigma * p_.sigma / (2.0 * a) * (-std::expm1(-2.0 * a * dt));
  return {mean, var};
}

double VasicekRegime::horizon() const { return kInf; }

std::optional<std::pair<double, double>> VasicekRegime::stationary() const {
  return std::make_pair(p_.b, p_.sigma * p_.sigma / (2.0 * p_.a));
}

// ---------------------------------------------------------------------------
// Hull-White

namespace {

constexpr int kHwOrder = 10;
constexpr double kHwMaxCell = 1.0 / 256.0;

}  // namespace

HullWhiteRegime::HullWhiteRegime(HullWhiteParams params) : p_(std::move(params)) {
  for (const auto& [t, v] : p_.sigma.knots()) {
    (void)t;
    if (v < 0.0) throw ArgumentError("hull_white: sigma table must be >= 0");
  }
  const double T = horizon();
  if (!(T > 0.0)) throw ArgumentError("hull_white: tables must cover a positive horizon");
  const auto cells = static_cast<std::size_t>(std::ceil(T / kHwMaxCell));
  cell_ = T / static_cast<double>(cells);
  nodes_.resize(cells + 1);
  nodes_[0] = Node{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  for (std::size_t c = 0; c < cells; ++c) {
    nodes_[c + 1] = propagate(nodes_[c], cell_ * static_cast<double>(c),
                              c + 1 == cells ? T : cell_ * static_cast<double>(c + 1));
  }
}

double HullWhiteRegime::horizon() const {
  return std::min({p_.alpha.horizon(), p_.beta.horizon(), p_.sigma.horizon()});
}

void HullWhiteRegime::check_time(double t) const {
  if (t > horizon() * (1.0 + 1e-12) + 1e-15) {
    std::ostringstream msg;
    msg << "hull_white: time " << t << " beyond the parameter tables' horizon " << horizon();
    throw ArgumentError(msg.str());
  }
}

HullWhiteRegime::Node HullWhiteRegime::propagate(const Node& from, double t0, double t1) const {
  // Integrands are smooth between table knots; split the interval at knots.
  std::vector<double> cuts{t0};
  for (const auto* table : {&p_.alpha, &p_.beta, &p_.sigma}) {
    for (const auto& [t, v] : table->knots()) {
      (void)v;
      if (t > t0 && t < t1) cuts.push_back(t);
    }
  }
  cuts.push_back(t1);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto integrate_pieces = [&](auto&& f, double a, double b) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double lo = std::max(a, cuts[k]);
      const double hi = std::min(b, cuts[k + 1]);
      if (hi > lo) total += numerics::integrate(f, lo, hi, 1, kHwOrder);
    }
    return total;
  };
  const double k0 = k(t0);
  auto offset_at = [&](double v) {
    const double kv = k(v);
    return std::exp(k0 - kv) * from.offset +
           integrate_pieces([&](double w) { return std::exp(k(w) - kv) * p_.alpha(w); }, t0, v);
  };
  auto variance_at = [&](double v) {
    const double kv = k(v);
    return std::exp(2.0 * (k0 - kv)) * from.variance +
           integrate_pieces(
               [&](double w) {
                 const double s = p_.sigma(w);
                 return std::exp(2.0 * (k(w) - kv)) * s * s;
               },
               t0, v);
  };
  auto cross_at = [&](double v) {
    const double kv = k(v);
    return std::exp(k0 - kv) * from.cross +
           integrate_pieces([&](double w) { return std::exp(k(w) - kv) * variance_at(w); }, t0,
                            v);
  };
  Node out;
  out.offset = offset_at(t1);
  out.variance = variance_at(t1);
  out.int_slope =
      from.int_slope + integrate_pieces([&](double w) { return std::exp(-k(w)); }, t0, t1);
  out.int_offset = from.int_offset + integrate_pieces(offset_at, t0, t1);
  out.cross = cross_at(t1);
  out.int_variance = from.int_variance + 2.0 * integrate_pieces(cross_at, t0, t1);
  return out;
}

GaussianCoefficients HullWhiteRegime::coefficients(double t) const {
  check_time(t);
  auto c = static_cast<std::size_t>(std::floor(t / cell_));
  c = std::min(c, nodes_.size() - 1);
  const double t0 = cell_ * static_cast<double>(c);
  const Node n = (t > t0) ? propagate(nodes_[c], t0, t) : nodes_[c];
  GaussianCoefficients out;
  out.slope = std::exp(-k(t));
  out.offset = n.offset;
  out.variance = n.variance;
  out.int_slope = n.int_slope;
  out.int_offset = n.int_offset;
  out.int_variance = n.int_variance;
  out.cross = n.cross;
  return out;
}

std::pair<double, double> HullWhiteRegime::transition(double r, double clock, double dt) const {
  const double t1 = clock + dt;
  check_time(t1);
  const double k1 = k(t1);
  std::vector<double> cuts{clock};
  for (const auto* table : {&p_.alpha, &p_.beta, &p_.sigma}) {
    for (const auto& [t, v] : table->knots()) {
      (void)v;
      if (t > clock && t < t1) cuts.push_back(t);
    }
  }
  cuts.push_back(t1);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double drift = 0.0;
  double var = 0.0;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p];
    const double hi = cuts[p + 1];
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) * 8.0)));
    drift += numerics::integrate([&](double w) { return std::exp(k(w) - k1) * p_.alpha(w); }, lo,
                                 hi, panels, kHwOrder);
    var += numerics::integrate(
        [&](double w) {
          const double s = p_.sigma(w);
          return std::exp(2.0 * (k(w) - k1)) * s * s;
        },
        lo, hi, panels, kHwOrder);
  }
  return {std::exp(k(clock) - k1) * r + drift, var};
}

// ---------------------------------------------------------------------------
// CIR

namespace {

struct CirSplit {
  double gamma;
  double gp;  // gamma + b
  double gm;  // gamma - b
};

/// gamma = sqrt(b^2 + 2 sigma^2 mu) with gamma +- b formed without
/// cancellation.
CirSplit cir_split(const CirParams& p, double mu) {
  const double s2 = p.sigma * p.sigma;
  const double gamma = std::sqrt(p.b * p.b + 2.0 * s2 * mu);
  CirSplit out{gamma, 0.0, 0.0};
  if (p.b >= 0.0) {
    out.gp = gamma + p.b;
    out.gm = out.gp > 0.0 ? 2.0 * s2 * mu / out.gp : 0.0;
  } else {
    out.gm = gamma - p.b;
    out.gp = 2.0 * s2 * mu / out.gm;
  }
  return out;
}

/// Deterministic flow of dr = (a - b r) dt: (r(t), int_0^t r).
std::pair<double, double> cir_flow(const CirParams& p, double r0, double t) {
  const double g = decay_integral(p.b, t);  // (1 - e^{-bt}) / b
  const double r = r0 * std::exp(-p.b * t) + p.a * g;
  // int_0^t r = r0 g + a (t - g) / b, with the b -> 0 limit a t^2 / 2.
  double tail;
  if (std::fabs(p.b * t) < 1e-6) {
    tail = p.a * t * t * (0.5 - p.b * t / 6.0);
  } else {
    tail = p.a * (t - g) / p.b;
  }
  return {r, r0 * g + tail};
}

}  // namespace

double cir_joint_laplace(const CirParams& p, double r0, double lambda, double mu, double t) {
  if (!(lambda >= 0.0) || !(mu >= 0.0)) {
    throw ArgumentError("cir_joint_laplace: lambda and mu must be >= 0");
  }
  require_nonnegative_time(t, "cir_joint_laplace");
  if (lambda == 0.0 && mu == 0.0) return 1.0;
  if (t == 0.0) return std::exp(-lambda * r0);
  const double s2 = p.sigma * p.sigma;
  if (s2 == 0.0 && p.b <= 0.0) {
    const auto [r, integral] = cir_flow(p, r0, t);
    return std::exp(-lambda * r - mu * integral);
  }
  const CirSplit sp = cir_split(p, mu);
  const double gamma = sp.gamma;
  double phi;
  double psi;
  if (gamma == 0.0) {
    // b = 0, mu = 0.
    phi = 2.0 / s2 * std::log1p(0.5 * s2 * lambda * t);
    psi = 2.0 * lambda / (s2 * lambda * t + 2.0);
  } else {
    const double em = std::exp(-gamma * t);
    const double f = decay_integral(gamma, t) * 0.5;  // (1 - em) / (2 gamma)
    // gm / sigma^2 without dividing by a vanishing sigma.
    const double gm_over_s2 = (p.b >= 0.0) ? 2.0 * mu / sp.gp : sp.gm / s2;
    // phi = (2/s2) log1p(x) + t gm / s2, x = (1 - em)(s2 lambda - gm) / (2 gamma)
    const double x_over_s2 = f * (lambda - gm_over_s2);
    const double x = x_over_s2 * s2;
    const double log_ratio = (x == 0.0) ? 1.0 : std::log1p(x) / x;
    phi = 2.0 * x_over_s2 * log_ratio + t * gm_over_s2;
    // psi = [lambda (gp em + gm) + 2 mu (1 - em)] / [s2 lambda (1 - em) + gm em + gp]
    const double one_minus_em = -std::expm1(-gamma * t);
    const double num = lambda * (sp.gp * em + sp.gm) + 2.0 * mu * one_minus_em;
    const double den = s2 * lambda * one_minus_em + sp.gm * em + sp.gp;
    psi = num / den;
  }
  const double value = std::exp(-p.a * phi - r0 * psi);
  if (std::isnan(value)) throw NumericError("cir_joint_laplace: NaN");
  return value;
}

double cir_laplace_rate(const CirParams& params, double r0, double lambda, double t) {
  return cir_joint_laplace(params, r0, lambda, 0.0, t);
}

CirRegime::CirRegime(CirParams params) : p_(params) {
  if (!(p_.a >= 0.0) || !std::isfinite(p_.a)) throw ArgumentError("cir: a must be >= 0");
  if (!(p_.sigma >= 0.0) || !std::isfinite(p_.sigma)) {
    throw ArgumentError("cir: sigma must be >= 0");
  }
  if (!std::isfinite(p_.b)) throw ArgumentError("cir: b must be finite");
}

double CirRegime::mean(double r0, double t) const {
  require_nonnegative_time(t, "transition_mean");
  return r0 * std::exp(-p_.b * t) + p_.a * decay_integral(p_.b, t);
}

double CirRegime::variance(double r0, double t) const {
  require_nonnegative_time(t, "transition_variance");
  const double g = decay_integral(p_.b, t);
  const double s2 = p_.sigma * p_.sigma;
  return r0 * s2 * std::exp(-p_.b * t) * g + 0.5 * p_.a * s2 * g * g;
}

double CirRegime::integrated_mean(double, double) const {
  throw UnsupportedOperation("integrated_mean: not available for CIR regimes; use bond_laplace");
}

double CirRegime::integrated_variance(double, double) const {
  throw UnsupportedOperation(
      "integrated_variance: not available for CIR regimes; use bond_laplace");
}

double CirRegime::bond_laplace(double r0, int n, double s) const {
  if (n < 1) throw ArgumentError("bond_laplace: order n must be >= 1");
  return cir_joint_laplace(p_, r0, 0.0, static_cast<double>(n), s);
}

double CirRegime::product_mean(double r0, double s, double h) const {
  require_nonnegative_time(h, "product_mean");
  // E[r(s+h) | r(s)] is affine in r(s) with slope e^{-bh}.
  return mean(r0, s) * mean(r0, s + h) + std::exp(-p_.b * h) * variance(r0, s);
}

TransitionLaw CirRegime::law(double r0, double t, double tilt) const {
  require_nonnegative_time(t, "transition law");
  if (!(tilt >= 0.0)) throw ArgumentError("transition law: tilt must be >= 0");
  TransitionLaw law;
  const double s2 = p_.sigma * p_.sigma;
  if (t == 0.0 || s2 == 0.0) {
    law.shape = TransitionLaw::Shape::Point;
    law.mean = (t == 0.0) ? r0 : cir_flow(p_, r0, t).first;
    return law;
  }
  // The tilted law keeps the scaled noncentral chi-square form; scale and
  // noncentrality follow from the joint Laplace transform.
  const CirSplit sp = cir_split(p_, tilt);
  double f;      // (1 - e^{-gamma t}) / (2 gamma)
  double ratio;  // (gm e^{-gamma t} + gp) / (2 gamma)
  double em;
  if (sp.gamma == 0.0) {
    f = 0.5 * t;
    ratio = 1.0;
    em = 1.0;
  } else {
    em = std::exp(-sp.gamma * t);
    f = 0.5 * decay_integral(sp.gamma, t);
    ratio = (sp.gm * em + sp.gp) / (2.0 * sp.gamma);
  }
  law.shape = TransitionLaw::Shape::ScaledNoncentralChiSquared;
  law.scale = s2 * f / (2.0 * ratio);
  law.dof = 4.0 * p_.a / s2;
  law.noncentrality = 2.0 * r0 * em / (s2 * f * ratio);
  law.mean = law.scale * (law.dof + law.noncentrality);
  law.variance = law.scale * law.scale * 2.0 * (law.dof + 2.0 * law.noncentrality);
  return law;
}

double CirRegime::exact_step(double r, double /*clock*/, double dt, RngStream& rng,
                             bool antithetic) const {
  if (!(dt > 0.0)) throw ArgumentError("exact_step: dt must be > 0");
  if (antithetic) throw ArgumentError("exact_step: antithetic draws are Gaussian-only");
  const double s2 = p_.sigma * p_.sigma;
  if (s2 == 0.0) return cir_flow(p_, r, dt).first;
  const double c = 0.25 * s2 * decay_integral(p_.b, dt);
  const double dof = 4.0 * p_.a / s2;
  const double nc = std::max(r, 0.0) * std::exp(-p_.b * dt) / c;
  long poisson = 0;
  if (nc > 0.0) {
    std::poisson_distribution<long> pois(0.5 * nc);
    poisson = pois(rng);
  }
  const double shape = 0.5 * dof + static_cast<double>(poisson);
  if (shape <= 0.0) return 0.0;
  std::gamma_distribution<double> gam(shape, 2.0);
  return c * gam(rng);
}

double CirRegime::horizon() const { return kInf; }

std::optional<std::pair<double, double>> CirRegime::stationary() const {
  if (!(p_.b > 0.0)) return std::nullopt;
  const double m = p_.a / p_.b;
  return std::make_pair(m, p_.a * p_.sigma * p_.sigma / (2.0 * p_.b * p_.b));
}

// ---------------------------------------------------------------------------
// RateModel

RateModel::RateModel(ModelKind kind, std::vector<std::shared_ptr<const Regime>> regimes)
    : kind_(kind), regimes_(std::move(regimes)) {
  if (regimes_.empty()) throw ArgumentError("rate model: need at least one regime");
}

RateModel RateModel::vasicek(const std::vector<VasicekParams>& params) {
  std::vector<std::shared_ptr<const Regime>> regimes;
  for (const auto& p : params) regimes.push_back(std::make_shared<VasicekRegime>(p));
  return RateModel(ModelKind::Vasicek, std::move(regimes));
}

RateModel RateModel::hull_white(const std::vector<HullWhiteParams>& params) {
  std::vector<std::shared_ptr<const Regime>> regimes;
  for (const auto& p : params) regimes.push_back(std::make_shared<HullWhiteRegime>(p));
  return RateModel(ModelKind::HullWhite, std::move(regimes));
}

RateModel RateModel::cir(const std::vector<CirParams>& params) {
  std::vector<std::shared_ptr<const Regime>> regimes;
  for (const auto& p : params) regimes.push_back(std::make_shared<CirRegime>(p));
  return RateModel(ModelKind::Cir, std::move(regimes));
}

const Regime& RateModel::regime(std::size_t i) const {
  if (i >= regimes_.size()) {
    throw ArgumentError("rate model: regime index " + std::to_string(i) + " out of range");
  }
  return *regimes_[i];
}

std::vector<std::string> RateModel::diagnostics() const {
  std::vector<std::string> out;
  if (kind_ != ModelKind::Cir) return out;
  for (std::size_t i = 0; i < regimes_.size(); ++i) {
    const auto& p = static_cast<const CirRegime&>(*regimes_[i]).params();
    if (p.feller_ratio() < 1.0) {
      std::ostringstream msg;
      msg << "regime " << i + 1 << ": Feller ratio 2a/sigma^2 = " << p.feller_ratio()
          << " < 1, zero is attainable";
      out.push_back(msg.str());
    }
  }
  return out;
}

double transition_mean(const RateModel& model, std::size_t i, double r0, double t) {
  return model.regime(i).mean(r0, t);
}

double transition_variance(const RateModel& model, std::size_t i, double r0, double t) {
  return model.regime(i).variance(r0, t);
}

double integrated_mean(const RateModel& model, std::size_t i, double r0, double s) {
  return model.regime(i).integrated_mean(r0, s);
}

double integrated_variance(const RateModel& model, std::size_t i, double r0, double s) {
  return model.regime(i).integrated_variance(r0, s);
}

double bond_laplace(const RateModel& model, std::size_t i, double r0, int n, double s) {
  return model.regime(i).bond_laplace(r0, n, s);
}

double product_mean(const RateModel& model, std::size_t i, double r0, double s, double h) {
  return model.regime(i).product_mean(r0, s, h);
}

double exact_step(const RateModel& model, std::size_t i, double r, double dt, RngStream& rng) {
  return model.regime(i).exact_step(r, 0.0, dt, rng);
}

// ---------------------------------------------------------------------------
// Quadrature

namespace {

RateQuadrature point_rule(double x) {
  RateQuadrature q;
  q.nodes = {x};
  q.weights = {1.0};
  q.order = 1;
  return q;
}

/// Raw moments mu_0..mu_{2n} of the standardized scaled noncentral
/// chi-square law, from its cumulants kappa_j = 2^{j-1} (j-1)! (d + j nu).
std::vector<long double> standardized_chi2_moments(double dof, double nc, int n) {
  const int top = 2 * n;
  const long double d = dof;
  const long double v = nc;
  const long double var = 2.0L * (d + 2.0L * v);
  std::vector<long double> kappa(top + 1, 0.0L);
  long double fact = 1.0L;  // (j-1)!
  long double pow2 = 1.0L;  // 2^{j-1}
  for (int j = 1; j <= top; ++j) {
    if (j > 1) {
      fact *= static_cast<long double>(j - 1);
      pow2 *= 2.0L;
    }
    if (j == 1) continue;
    if (j == 2) {
      kappa[2] = 1.0L;
      continue;
    }
    kappa[j] = pow2 * fact * (d + j * v) / std::pow(var, 0.5L * j);
  }
  std::vector<long double> mu(top + 1, 0.0L);
  mu[0] = 1.0L;
  for (int m = 1; m <= top; ++m) {
    long double acc = 0.0L;
    long double binom = 1.0L;  // C(m-1, k-1)
    for (int k = 1; k <= m; ++k) {
      if (k > 1) binom = binom * static_cast<long double>(m - k + 1) / static_cast<long double>(k - 1);
      acc += binom * kappa[k] * mu[m - k];
    }
    mu[m] = acc;
  }
  return mu;
}

}  // namespace

RateQuadrature quadrature_for_law(const TransitionLaw& law, int order) {
  if (order < 1 || order > numerics::kMaxTabulatedOrder) {
    throw ArgumentError("transition_quadrature: order must lie in [1, 64]");
  }
  if (law.shape == TransitionLaw::Shape::Point || !(law.variance > 0.0) || order == 1) {
    return point_rule(law.mean);
  }
  const double sd = std::sqrt(law.variance);
  if (law.shape == TransitionLaw::Shape::Gaussian) {
    const auto& gh = numerics::gauss_hermite(order);
    RateQuadrature q;
    q.nodes.resize(gh.nodes.size());
    q.weights = gh.weights;
    for (std::size_t k = 0; k < gh.nodes.size(); ++k) q.nodes[k] = law.mean + sd * gh.nodes[k];
    q.order = order;
    return q;
  }
  for (int n = order; n >= 2; --n) {
    const auto moments = standardized_chi2_moments(law.dof, law.noncentrality, n);
    auto rule = numerics::gauss_from_moments(moments, n);
    if (!rule) continue;
    RateQuadrature q;
    q.nodes.resize(rule->nodes.size());
    q.weights = rule->weights;
    for (std::size_t k = 0; k < rule->nodes.size(); ++k) {
      q.nodes[k] = std::max(0.0, law.mean + sd * rule->nodes[k]);
    }
    q.order = n;
    q.reduced_order = n < order;
    return q;
  }
  throw NumericError("transition_quadrature: no stable Gauss rule for the CIR transition law");
}

RateQuadrature transition_quadrature(const RateModel& model, std::size_t i, double r0, double t,
                                     int order, double tilt) {
  return quadrature_for_law(model.regime(i).law(r0, t, tilt), order);
}

}  // namespace smrate
