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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smrate/rng.hpp"

namespace smrate {

enum class ModelKind { Vasicek, HullWhite, Cir };

std::string_view to_string(ModelKind kind);

/// dr = a (b - r) dt + sigma dW.
struct VasicekParams {
  double a = 1.0;
  double b = 0.0;
  double sigma = 0.0;
};

/// dr = (a - b r) dt + sigma sqrt(r) dW.
struct CirParams {
  double a = 0.0;
  double b = 1.0;
  double sigma = 0.0;
  /// 2a / sigma^2; below one the origin is attainable.
  double feller_ratio() const;
};

/// Piecewise-linear function of time given by (t, value) knots; the first
/// knot must sit at t = 0 and the function is defined up to the last knot.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  explicit PiecewiseLinear(std::vector<std::pair<double, double>> knots);
  static PiecewiseLinear constant(double value, double horizon);

  double operator()(double t) const;
  /// Integral over [0, t], exact.
  double integral(double t) const;
  double horizon() const { return knots_.back().first; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

 private:
  std::size_t segment(double t) const;
  std::vector<std::pair<double, double>> knots_{{0.0, 0.0}};
  std::vector<double> cumulative_{0.0};
};

/// dr = (alpha(t) - beta(t) r) dt + sigma(t) dW, with t the time spent in the
/// current regime segment.
struct HullWhiteParams {
  PiecewiseLinear alpha;
  PiecewiseLinear beta;
  PiecewiseLinear sigma;
};

/// Law of r(t) given r(0), optionally under the exponential tilt
/// exp(-n int_0^t r) / E[exp(-n int_0^t r)].
struct TransitionLaw {
  enum class Shape { Point, Gaussian, ScaledNoncentralChiSquared };
  Shape shape = Shape::Point;
  double mean = 0.0;
  double variance = 0.0;
  /// r = scale * X, X ~ chi'^2(dof, noncentrality); ScaledNoncentralChiSquared only.
  double scale = 0.0;
  double dof = 0.0;
  double noncentrality = 0.0;
};

/// Discrete probability measure approximating a transition law.
struct RateQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// Order actually delivered (may be lower than requested for CIR).
  int order = 0;
  /// Set when the requested order was unstable and a lower one was used.
  bool reduced_order = false;
};

/// Dynamics of the short rate inside one regime. All times are measured
/// from the moment the regime segment started.
class Regime {
 public:
  virtual ~Regime() = default;

  virtual ModelKind kind() const = 0;
  virtual bool gaussian() const = 0;

  virtual double mean(double r0, double t) const = 0;
  virtual double variance(double r0, double t) const = 0;
  /// Mean and variance of int_0^s r; Gaussian regimes only.
  virtual double integrated_mean(double r0, double s) const = 0;
  virtual double integrated_variance(double r0, double s) const = 0;
  /// E[exp(-n int_0^s r)].
  virtual double bond_laplace(double r0, int n, double s) const = 0;
  /// E[r(s) r(s + h)].
  virtual double product_mean(double r0, double s, double h) const = 0;
  /// Law of r(t); `tilt` > 0 weights paths by exp(-tilt int_0^t r).
  virtual TransitionLaw law(double r0, double t, double tilt = 0.0) const = 0;
  /// Exact draw of r(clock + dt) given r(clock) = r. `antithetic` negates
  /// the Gaussian innovation.
  virtual double exact_step(double r, double clock, double dt, RngStream& rng,
                            bool antithetic = false) const = 0;
  /// Longest segment time the parameters are defined for.
  virtual double horizon() const = 0;
  /// Long-run (mean, variance) when the regime is stationary.
  virtual std::optional<std::pair<double, double>> stationary() const = 0;
};

/// Coefficients of a Gaussian regime started at r(0) = x, as affine
/// functions of x:
///   E r(t) = slope * x + offset,  Var r(t) = variance,
///   E int r = int_slope * x + int_offset,  Var int r = int_variance,
///   Cov(int_0^t r, r(t)) = cross.
struct GaussianCoefficients {
  double slope = 1.0;
  double offset = 0.0;
  double variance = 0.0;
  double int_slope = 0.0;
  double int_offset = 0.0;
  double int_variance = 0.0;
  double cross = 0.0;
};

class GaussianRegime : public Regime {
 public:
  /// Building blocks evaluated on precomputed coefficients, so callers that
  /// sweep many starting rates at a fixed time pay for coefficients() once.
  static double bond_from(const GaussianCoefficients& c, double r0, int n);
  static TransitionLaw law_from(const GaussianCoefficients& c, double r0, double tilt);
  /// E[r(s) r(s + h)] from the coefficients at s and s + h.
  static double product_from(const GaussianCoefficients& cs, const GaussianCoefficients& ch,
                             double r0);

  bool gaussian() const override { return true; }
  double mean(double r0, double t) const override;
  double variance(double r0, double t) const override;
  double integrated_mean(double r0, double s) const override;
  double integrated_variance(double r0, double s) const override;
  double bond_laplace(double r0, int n, double s) const override;
  double product_mean(double r0, double s, double h) const override;
  TransitionLaw law(double r0, double t, double tilt = 0.0) const override;
  double exact_step(double r, double clock, double dt, RngStream& rng,
                    bool antithetic = false) const override;

  virtual GaussianCoefficients coefficients(double t) const = 0;
  /// (mean, variance) of r(clock + dt) given r(clock) = r.
  virtual std::pair<double, double> transition(double r, double clock, double dt) const = 0;
};

class VasicekRegime final : public GaussianRegime {
 public:
  explicit VasicekRegime(VasicekParams params);
  ModelKind kind() const override { return ModelKind::Vasicek; }
  GaussianCoefficients coefficients(double t) const override;
  std::pair<double, double> transition(double r, double clock, double dt) const override;
  double horizon() const override;
  std::optional<std::pair<double, double>> stationary() const override;
  const VasicekParams& params() const { return p_; }

 private:
  VasicekParams p_;
};

class HullWhiteRegime final : public GaussianRegime {
 public:
  explicit HullWhiteRegime(HullWhiteParams params);
  ModelKind kind() const override { return ModelKind::HullWhite; }
  GaussianCoefficients coefficients(double t) const override;
  std::pair<double, double> transition(double r, double clock, double dt) const override;
  double horizon() const override;
  std::optional<std::pair<double, double>> stationary() const override { return std::nullopt; }
  const HullWhiteParams& params() const { return p_; }
  /// k(t) = int_0^t beta.
  double k(double t) const { return p_.beta.integral(t); }

 private:
  struct Node {
    double offset;      // e^{-k} int e^{k} alpha
    double variance;    // e^{-2k} int e^{2k} sigma^2
    double int_slope;   // int e^{-k}
    double int_offset;  // int offset
    double cross;       // int e^{-(k(t)-k(u))} variance(u) du
    double int_variance;
  };
  Node propagate(const Node& from, double t0, double t1) const;
  void check_time(double t) const;

  HullWhiteParams p_;
  double cell_ = 0.0;
  std::vector<Node> nodes_;
};

class CirRegime final : public Regime {
 public:
  explicit CirRegime(CirParams params);
  ModelKind kind() const override { return ModelKind::Cir; }
  bool gaussian() const override { return false; }
  double mean(double r0, double t) const override;
  double variance(double r0, double t) const override;
  /// Not available in closed form; throws UnsupportedOperation.
  double integrated_mean(double r0, double s) const override;
  double integrated_variance(double r0, double s) const override;
  double bond_laplace(double r0, int n, double s) const override;
  double product_mean(double r0, double s, double h) const override;
  TransitionLaw law(double r0, double t, double tilt = 0.0) const override;
  double exact_step(double r, double clock, double dt, RngStream& rng,
                    bool antithetic = false) const override;
  double horizon() const override;
  std::optional<std::pair<double, double>> stationary() const override;
  const CirParams& params() const { return p_; }

 private:
  CirParams p_;
};

/// E[exp(-lambda r(t) - mu int_0^t r)] for a CIR regime started at r0,
/// i.e. exp(-a phi(t) - r0 psi(t)).
double cir_joint_laplace(const CirParams& params, double r0, double lambda, double mu, double t);
/// E[exp(-lambda r(t))].
double cir_laplace_rate(const CirParams& params, double r0, double lambda, double t);

/// Per-regime short-rate dynamics of one model family.
class RateModel {
 public:
  static RateModel vasicek(const std::vector<VasicekParams>& params);
  static RateModel hull_white(const std::vector<HullWhiteParams>& params);
  static RateModel cir(const std::vector<CirParams>& params);

  ModelKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return regimes_.size(); }
  const Regime& regime(std::size_t i) const;
  bool gaussian() const { return kind_ != ModelKind::Cir; }
  bool closed_form_bond_laplace() const { return true; }
  /// Human-readable parameter warnings (e.g. Feller condition violated).
  std::vector<std::string> diagnostics() const;

 private:
  RateModel(ModelKind kind, std::vector<std::shared_ptr<const Regime>> regimes);
  ModelKind kind_;
  std::vector<std::shared_ptr<const Regime>> regimes_;
};

double transition_mean(const RateModel& model, std::size_t i, double r0, double t);
double transition_variance(const RateModel& model, std::size_t i, double r0, double t);
double integrated_mean(const RateModel& model, std::size_t i, double r0, double s);
double integrated_variance(const RateModel& model, std::size_t i, double r0, double s);
double bond_laplace(const RateModel& model, std::size_t i, double r0, int n, double s);
double product_mean(const RateModel& model, std::size_t i, double r0, double s, double h);
double exact_step(const RateModel& model, std::size_t i, double r, double dt, RngStream& rng);

/// Discrete measure matching `law`: Gauss-Hermite for Gaussian laws, a
/// moment-matched Gauss rule for the scaled noncentral chi-square law
/// (falling back to lower orders when the moment problem is too
/// ill-conditioned). Order 1 is the single node at the mean.
RateQuadrature quadrature_for_law(const TransitionLaw& law, int order);

RateQuadrature transition_quadrature(const RateModel& model, std::size_t i, double r0, double t,
                                     int order, double tilt = 0.0);

}  // namespace smrate
