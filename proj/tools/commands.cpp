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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "smrate/error.hpp"
#include "smrate/io.hpp"
#include "smrate/monte_carlo.hpp"
#include "smrate/semi_markov.hpp"

namespace smrate::cli {

namespace {

using Json = nlohmann::ordered_json;
using Header = std::vector<std::pair<std::string, std::string>>;

std::string str(double x) { return io::format_double(x); }

/// Independent seed for one estimator family, derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) {
  return io::fnv1a64(io::hex64(seed) + "/" + tag);
}

/// Lazily solved surfaces shared by the commands.
class Surfaces {
 public:
  explicit Surfaces(const ExperimentConfig& c) : c_(c) {}

  const MomentSurface& zcb(int n) {
    auto it = zcb_.find(n);
    if (it == zcb_.end()) {
      it = zcb_.emplace(n, solve_zcb_moment(n, c_.kernel, c_.model, c_.solver)).first;
    }
    return it->second;
  }

  std::shared_ptr<const MomentSurface> rate_mean() {
    if (!rate_) {
      rate_ = std::make_shared<const MomentSurface>(
          solve_rate_mean(c_.kernel, c_.model, c_.solver));
    }
    return rate_;
  }

  const MomentSurface& product(double lag) {
    auto it = xi_.find(lag);
    if (it == xi_.end()) {
      SolverConfig cfg = c_.solver;
      const double steps = std::round((c_.solver.horizon - lag) / cfg.step);
      cfg.horizon = cfg.step * steps;
      it = xi_.emplace(lag, solve_product_moment(lag, c_.kernel, c_.model, cfg, rate_mean()))
               .first;
    }
    return it->second;
  }

 private:
  const ExperimentConfig& c_;
  std::map<int, MomentSurface> zcb_;
  std::shared_ptr<const MomentSurface> rate_;
  std::map<double, MomentSurface> xi_;
};

Header surface_header(const ExperimentConfig& c, const MomentSurface& s) {
  const auto& cfg = s.config();
  Header h{{"config_hash", c.hash},
           {"quantity", std::string(to_string(s.quantity()))}};
  if (s.quantity() == Quantity::ZcbMoment) h.emplace_back("order", std::to_string(s.order()));
  if (s.quantity() == Quantity::ProductMoment) h.emplace_back("lag", str(s.lag()));
  h.emplace_back("time_step", str(s.time_grid().step()));
  h.emplace_back("time_horizon", str(s.time_grid().horizon()));
  h.emplace_back("rate_lower", str(s.rate_grid().lower()));
  h.emplace_back("rate_upper", str(s.rate_grid().upper()));
  h.emplace_back("rate_nodes", std::to_string(s.rate_grid().nodes()));
  h.emplace_back("quadrature_order", std::to_string(s.diagnostics().quadrature_order));
  h.emplace_back("coupling", std::string(to_string(cfg.coupling)));
  h.emplace_back("max_escape", str(s.diagnostics().max_escape));
  return h;
}

void write_surface(const ExperimentConfig& c, const MomentSurface& s, const std::string& label,
                   const std::filesystem::path& file) {
  io::CsvWriter csv(file, surface_header(c, s), {"quantity", "state", "s", "x", "value"});
  const auto& tg = s.time_grid();
  const auto& rg = s.rate_grid();
  for (std::size_t k = 0; k < tg.nodes(); ++k) {
    for (std::size_t i = 0; i < s.states(); ++i) {
      for (std::size_t p = 0; p < rg.nodes(); ++p) {
        csv.cell(label).cell(i + 1).cell(tg.at(k)).cell(rg.at(p)).cell(s.value(i, k, p));
        csv.end_row();
      }
    }
  }
}

std::string lag_tag(double lag) {
  std::string t = str(lag);
  std::replace(t.begin(), t.end(), '.', 'p');
  return t;
}

// --- agreement checks ----------------------------------------------------------

struct Check {
  EstimatorReport report;
  double analytic = 0.0;
};

double z_score(const Check& c) {
  const double diff = c.report.estimate - c.analytic;
  if (c.report.standard_error > 0.0) return diff / c.report.standard_error;
  // A degenerate estimate (all samples equal) agrees up to round-off or not at all.
  const double tol = 1e-9 * std::max(1.0, std::fabs(c.analytic));
  return std::fabs(diff) <= tol ? 0.0 : std::copysign(HUGE_VAL, diff);
}

/// A check passes when |z| lies strictly below the threshold, so a zero
/// threshold fails every check.
bool passes(double z, double threshold) { return std::fabs(z) < threshold; }

Json check_json(const Check& c, double threshold, const char* value_key) {
  const double z = z_score(c);
  Json j;
  j["quantity"] = c.report.quantity;
  j["state"] = c.report.state + 1;
  j["backward"] = c.report.backward;
  j["r0"] = c.report.r0;
  j["s"] = c.report.s;
  if (c.report.quantity == "product_moment") j["lag"] = c.report.lag;
  if (c.report.order > 0) j["order"] = c.report.order;
  j["analytic"] = c.analytic;
  j[value_key] = c.report.estimate;
  j["se"] = c.report.standard_error;
  j["z"] = std::isfinite(z) ? Json(z) : Json(nullptr);
  j["replications"] = c.report.replications;
  j["seed"] = c.report.seed;
  j["pass"] = passes(z, threshold);
  return j;
}

std::vector<Check> zcb_checks(Surfaces& surf, const ExperimentConfig& c,
                              const BackwardState& start, double r0,
                              const std::vector<int>& orders, const std::vector<double>& times,
                              std::size_t reps, std::uint64_t seed,
                              const SimulationOptions& opts) {
  std::vector<Check> out;
  if (orders.empty() || times.empty()) return out;
  const auto reports =
      estimate_zcb_moments(c.kernel, c.model, start, r0, orders, times, reps, seed, opts);
  for (const auto& r : reports) {
    const double a = evaluate_zcb_moment(surf.zcb(r.order), c.kernel, c.model, start.state,
                                         start.backward, r0, r.s);
    out.push_back({r, a});
  }
  return out;
}

std::vector<Check> rate_checks(Surfaces& surf, const ExperimentConfig& c,
                               const BackwardState& start, double r0,
                               const std::vector<double>& times, const std::vector<double>& lags,
                               std::size_t reps, std::uint64_t seed,
                               const SimulationOptions& opts) {
  std::vector<Check> out;
  if (times.empty() || lags.empty()) return out;
  const auto pairs =
      estimate_rate_moments_grid(c.kernel, c.model, start, r0, times, lags, reps, seed, opts);
  const auto R = surf.rate_mean();
  for (std::size_t a = 0; a < times.size(); ++a) {
    const auto& mean = pairs[a * lags.size()].first;
    out.push_back(
        {mean, evaluate_rate_mean(*R, c.kernel, c.model, start.state, start.backward, r0,
                                  mean.s)});
    for (std::size_t b = 0; b < lags.size(); ++b) {
      const auto& prod = pairs[a * lags.size() + b].second;
      out.push_back({prod, evaluate_product_moment(surf.product(lags[b]), c.kernel, c.model,
                                                   start.state, start.backward, r0, prod.s)});
    }
  }
  return out;
}

double interpolate_in_time(const TransitionTable& t, std::size_t i, std::size_t j, double s) {
  const auto& g = t.grid();
  const double x = s / g.step();
  const auto k = std::min(static_cast<std::size_t>(x), g.intervals());
  if (k >= g.intervals()) return t.at(i, j, g.intervals());
  const double f = x - static_cast<double>(k);
  return (1.0 - f) * t.at(i, j, k) + f * t.at(i, j, k + 1);
}

}  // namespace

// --- commands --------------------------------------------------------------------

int cmd_phi(const ExperimentConfig& c, const std::filesystem::path& out) {
  const TimeGrid grid(c.phi.step, c.phi.horizon);
  const auto phi = transition_probabilities(c.kernel, grid);
  const auto back = backward_transition_probabilities(c.kernel, c.phi.backward, phi);
  const std::size_t m = c.kernel.size();
  Header header{{"config_hash", c.hash},
                {"time_step", str(grid.step())},
                {"time_horizon", str(grid.horizon())},
                {"backward", str(c.phi.backward)},
                {"max_row_drift", str(phi.max_row_drift())},
                {"max_row_drift_backward", str(back.max_row_drift())}};
  io::CsvWriter csv(out / "phi.csv", header,
                    {"t", "i", "j", "phi", "phi_backward", "row_sum", "row_sum_backward"});
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      double sum_b = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        sum += phi.at(i, j, k);
        sum_b += back.at(i, j, k);
      }
      for (std::size_t j = 0; j < m; ++j) {
        csv.cell(grid.at(k)).cell(i + 1).cell(j + 1);
        csv.cell(phi.at(i, j, k)).cell(back.at(i, j, k)).cell(sum).cell(sum_b);
        csv.end_row();
      }
    }
  }
  std::cout << "phi: " << grid.nodes() << " time nodes, max row drift "
            << str(phi.max_row_drift()) << "\n";
  return kOk;
}

int cmd_moments(const ExperimentConfig& c, const std::filesystem::path& out) {
  Surfaces surf(c);
  for (int n : c.moments.orders) {
    write_surface(c, surf.zcb(n), "zcb_moment",
                  out / ("zcb_moment_n" + std::to_string(n) + ".csv"));
  }

  const auto R = surf.rate_mean();
  write_surface(c, *R, "rate_mean", out / "rate_mean.csv");

  const auto& rg = R->rate_grid();
  for (double lag : c.moments.lags) {
    const auto& xi = surf.product(lag);
    write_surface(c, xi, "product_moment", out / ("product_moment_h" + lag_tag(lag) + ".csv"));
    io::CsvWriter csv(out / ("covariance_h" + lag_tag(lag) + ".csv"), surface_header(c, xi),
                      {"quantity", "state", "s", "x", "value"});
    const std::size_t P = static_cast<std::size_t>(std::llround(lag / xi.time_grid().step()));
    for (std::size_t k = 0; k < xi.time_grid().nodes(); ++k) {
      for (std::size_t i = 0; i < xi.states(); ++i) {
        for (std::size_t p = 0; p < rg.nodes(); ++p) {
          const double cov = xi.value(i, k, p) - R->value(i, k, p) * R->value(i, k + P, p);
          if (P == 0 && cov < -c.solver.consistency_tolerance) {
            throw NumericError("covariance: variance " + str(cov) + " at state " +
                               std::to_string(i + 1) + ", s = " + str(xi.time_grid().at(k)) +
                               ", x = " + str(rg.at(p)));
          }
          csv.cell("covariance").cell(i + 1).cell(xi.time_grid().at(k)).cell(rg.at(p)).cell(cov);
          csv.end_row();
        }
      }
    }
  }

  const auto& v1 = surf.zcb(1);
  const auto& v2 = surf.zcb(2);
  Header jh{{"config_hash", c.hash},
            {"time_step", str(v1.time_grid().step())},
            {"time_horizon", str(v1.time_grid().horizon())},
            {"rate_lower", str(rg.lower())},
            {"rate_upper", str(rg.upper())},
            {"rate_nodes", std::to_string(rg.nodes())}};
  io::CsvWriter jensen(out / "jensen.csv", jh, {"state", "s", "x", "v1", "v2", "jensen"});
  double worst = HUGE_VAL;
  for (std::size_t k = 0; k < v1.time_grid().nodes(); ++k) {
    for (std::size_t i = 0; i < v1.states(); ++i) {
      for (std::size_t p = 0; p < rg.nodes(); ++p) {
        const double a = v1.value(i, k, p);
        const double b = v2.value(i, k, p);
        worst = std::min(worst, b - a * a);
        jensen.cell(i + 1).cell(v1.time_grid().at(k)).cell(rg.at(p));
        jensen.cell(a).cell(b).cell(b - a * a);
        jensen.end_row();
      }
    }
  }

  if (!c.moments.evaluate.empty()) {
    io::CsvWriter ev(out / "evaluations.csv", {{"config_hash", c.hash}},
                     {"quantity", "state", "backward", "r0", "s", "lag", "order", "value"});
    auto row = [&](const char* q, const StartPoint& pt, double s, double lag, int order,
                   double value) {
      ev.cell(q).cell(pt.state + 1).cell(pt.backward).cell(pt.r0).cell(s).cell(lag);
      ev.cell(std::to_string(order)).cell(value);
      ev.end_row();
    };
    for (const auto& pt : c.moments.evaluate) {
      for (double s : c.moments.times) {
        for (int n : c.moments.orders) {
          row("zcb_moment", pt, s, 0.0, n,
              evaluate_zcb_moment(surf.zcb(n), c.kernel, c.model, pt.state, pt.backward, pt.r0,
                                  s));
        }
        row("rate_mean", pt, s, 0.0, 0,
            evaluate_rate_mean(*R, c.kernel, c.model, pt.state, pt.backward, pt.r0, s));
        for (double lag : c.moments.lags) {
          const auto& xi = surf.product(lag);
          row("product_moment", pt, s, lag, 0,
              evaluate_product_moment(xi, c.kernel, c.model, pt.state, pt.backward, pt.r0, s));
          row("covariance", pt, s, lag, 0,
              covariance(xi, *R, pt.state, pt.backward, pt.r0, s, lag));
        }
      }
    }
  }
  std::cout << "moments: min jensen gap " << str(worst) << "\n";
  return kOk;
}

int cmd_simulate(const ExperimentConfig& c, const std::filesystem::path& out) {
  const auto& sim = c.simulate;
  const BackwardState start{sim.start.state, sim.start.backward};

  io::CsvWriter paths(out / "paths.csv",
                      {{"config_hash", c.hash},
                       {"seed", std::to_string(c.seed)},
                       {"horizon", str(sim.horizon)},
                       {"step", str(sim.step)}},
                      {"path", "t", "state", "r", "integral"});
  if (sim.horizon > 0.0) {
    const std::uint64_t path_seed = derive_seed(c.seed, "paths");
    for (std::size_t n = 0; n < sim.paths; ++n) {
      RngStream rng(path_seed, n);
      const auto rec = simulate_path(c.kernel, c.model, start, sim.start.r0, sim.horizon,
                                     sim.step, rng, false);
      for (const auto& p : rec.points) {
        paths.cell(n).cell(p.t).cell(p.state + 1).cell(p.r).cell(p.integral);
        paths.end_row();
      }
    }
  }

  Surfaces surf(c);
  const SimulationOptions zcb_opts{sim.step, sim.antithetic, c.solver.execution};
  const SimulationOptions rate_opts{HUGE_VAL, sim.antithetic, c.solver.execution};
  auto checks = zcb_checks(surf, c, start, sim.start.r0, sim.orders, sim.times,
                           sim.replications, derive_seed(c.seed, "zcb"), zcb_opts);
  const auto rates = rate_checks(surf, c, start, sim.start.r0, sim.times, sim.lags,
                                 sim.rate_replications, derive_seed(c.seed, "rate"), rate_opts);
  checks.insert(checks.end(), rates.begin(), rates.end());

  Json doc;
  doc["config_hash"] = c.hash;
  doc["seed"] = c.seed;
  doc["z_threshold"] = sim.z_threshold;
  doc["antithetic"] = sim.antithetic;
  Json reports = Json::array();
  bool all = true;
  for (const auto& ch : checks) {
    auto j = check_json(ch, sim.z_threshold, "estimate");
    all = all && j["pass"].get<bool>();
    reports.push_back(std::move(j));
  }
  doc["reports"] = std::move(reports);
  doc["all_within_threshold"] = all;
  io::write_text(out / "estimates.json", doc.dump(2) + "\n");
  std::cout << "simulate: " << checks.size() << " estimates, "
            << (all ? "all" : "not all") << " within " << str(sim.z_threshold) << " SE\n";
  return kOk;
}

int cmd_validate(const ExperimentConfig& c, const std::filesystem::path& out) {
  const auto& v = c.validate;
  Surfaces surf(c);
  const SimulationOptions zcb_opts{v.step, false, c.solver.execution};
  const SimulationOptions rate_opts{HUGE_VAL, false, c.solver.execution};

  std::optional<TransitionTable> phi;
  if (!v.occupancy_times.empty()) {
    phi.emplace(transition_probabilities(c.kernel, TimeGrid(c.solver.step, c.solver.horizon)));
  }

  Json checks = Json::array();
  std::size_t failed = 0;
  auto record = [&](const Check& ch) {
    auto j = check_json(ch, v.z_threshold, "mc");
    if (!j["pass"].get<bool>()) ++failed;
    checks.push_back(std::move(j));
  };

  for (std::size_t i : v.states) {
    for (std::size_t b = 0; b < v.backward.size(); ++b) {
      const BackwardState start{i, v.backward[b]};
      const std::string tag = std::to_string(i) + "/" + std::to_string(b);
      for (const auto& ch : zcb_checks(surf, c, start, v.r0, v.orders, v.times,
                                       v.zcb_replications, derive_seed(c.seed, "zcb/" + tag),
                                       zcb_opts)) {
        record(ch);
      }
      for (const auto& ch : rate_checks(surf, c, start, v.r0, v.rate_times, v.lags,
                                        v.rate_replications, derive_seed(c.seed, "rate/" + tag),
                                        rate_opts)) {
        record(ch);
      }
      if (phi) {
        const auto back = backward_transition_probabilities(c.kernel, start.backward, *phi);
        const auto reports =
            estimate_occupancy(c.kernel, start, v.occupancy_times, v.occupancy_replications,
                               derive_seed(c.seed, "occupancy/" + tag), c.solver.execution);
        const std::size_t m = c.kernel.size();
        for (std::size_t a = 0; a < reports.size(); ++a) {
          Check ch{reports[a], interpolate_in_time(back, i, a % m, reports[a].s)};
          ch.report.r0 = v.r0;
          record(ch);
        }
      }
    }
  }

  Json doc;
  doc["config_hash"] = c.hash;
  doc["seed"] = c.seed;
  doc["z_threshold"] = v.z_threshold;
  doc["checks"] = std::move(checks);
  doc["total"] = doc["checks"].size();
  doc["failed"] = failed;
  doc["pass"] = failed == 0;
  io::write_text(out / "validation.json", doc.dump(2) + "\n");
  std::cout << "validate: " << doc["total"].get<std::size_t>() - failed << "/"
            << doc["total"].get<std::size_t>() << " checks passed\n";
  return failed == 0 ? kOk : kValidationFailed;
}

int run(const std::string& command, const std::filesystem::path& config_path,
        const std::filesystem::path& out, std::optional<std::uint64_t> seed) {
  try {
    auto config = load_config(config_path);
    if (seed) config.seed = *seed;
    for (const auto& w : config.model.diagnostics()) std::cerr << "warning: " << w << "\n";
    if (command == "phi") return cmd_phi(config, out);
    if (command == "moments") return cmd_moments(config, out);
    if (command == "simulate") return cmd_simulate(config, out);
    if (command == "validate") return cmd_validate(config, out);
    std::cerr << "error: unknown command '" << command << "'\n";
    return kFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace smrate::cli
