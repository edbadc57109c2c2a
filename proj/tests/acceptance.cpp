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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria not listed after --allow-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "smrate/config.hpp"
#include "smrate/moment_engine.hpp"
#include "smrate/monte_carlo.hpp"
#include "smrate/rate_models.hpp"
#include "smrate/semi_markov.hpp"

namespace {

namespace fs = std::filesystem;
using namespace smrate;
using SD = SojournDistribution;

const fs::path kConfigs = fs::path(SMRATE_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome phi_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const SemiMarkovKernel k(2, {0, 1, 1, 0},
                           {std::nullopt, SD::exponential(1.0), SD::exponential(1.0), std::nullopt});
  const TimeGrid grid(0.005, 5.0);
  const auto phi = transition_probabilities(k, grid);
  double worst = 0.0;
  for (std::size_t n = 0; n < grid.nodes(); ++n) {
    const double t = grid.at(n);
    worst = std::max(worst, std::fabs(phi.at(0, 0, n) - 0.5 * (1.0 + std::exp(-2.0 * t))));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 5.0,
          "max |phi_11 - (1+e^-2t)/2| = " + fmt("%.3e", worst) + " (limit 1e-4), " +
              fmt("%.2f", secs) + " s (limit 5 s)"};
}

Outcome backward_degeneracy() {
  const auto cfg = load_config(kConfigs / "testbed.json");
  const auto phi = transition_probabilities(cfg.kernel, TimeGrid(0.005, 5.0));
  const auto b = backward_transition_probabilities(cfg.kernel, 0.0, phi);
  double worst = 0.0;
  const std::size_t m = cfg.kernel.size();
  for (std::size_t n = 0; n < phi.grid().nodes(); ++n) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        worst = std::max(worst, std::fabs(b.at(i, j, n) - phi.at(i, j, n)));
      }
    }
  }
  return {worst <= 1e-10, "max |bphi(0;t) - phi(t)| = " + fmt("%.3e", worst) + " (limit 1e-10)"};
}

Outcome single_regime() {
  const auto t0 = std::chrono::steady_clock::now();
  const SemiMarkovKernel k(1, {1.0}, {SD::weibull(1.5, 1.0)});
  SolverConfig cfg;
  cfg.step = 0.005;
  cfg.horizon = 5.0;
  std::ostringstream detail;
  bool ok = true;
  for (const auto& model : {RateModel::vasicek({{0.5, 0.04, 0.02}}),
                            RateModel::cir({{0.04, 1.0, 0.1}})}) {
    detail << to_string(model.kind()) << ":";
    for (int n = 1; n <= 3; ++n) {
      const auto v = solve_zcb_moment(n, k, model, cfg);
      double worst = 0.0;
      for (std::size_t t = 0; t < v.time_grid().nodes(); ++t) {
        for (std::size_t p = 0; p < v.rate_grid().nodes(); ++p) {
          const double exact = bond_laplace(model, 0, v.rate_grid().at(p), n, v.time_grid().at(t));
          worst = std::max(worst, std::fabs(v.value(0, t, p) - exact));
        }
      }
      ok = ok && worst <= 1e-4;
      detail << " n" << n << "=" << fmt("%.2e", worst);
    }
    detail << "; ";
  }
  const double secs = seconds_since(t0);
  detail << "limit 1e-4, " << fmt("%.1f", secs) << " s (limit 30 s)";
  return {ok && secs < 30.0, detail.str()};
}

Outcome zcb_cross_validation() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config(kConfigs / "testbed.json");
  const double r0 = 0.03;
  const std::vector<int> orders{1, 2};
  const std::vector<double> times{0.5, 1.0, 2.0};
  std::vector<MomentSurface> v;
  for (int n : orders) v.push_back(solve_zcb_moment(n, cfg.kernel, cfg.model, cfg.solver));
  double worst = 0.0;
  std::size_t checks = 0;
  std::uint64_t seed = 400;
  for (std::size_t i = 0; i < cfg.kernel.size(); ++i) {
    for (double u : {0.0, 0.5}) {
      const auto reps = estimate_zcb_moments(cfg.kernel, cfg.model, {i, u}, r0, orders, times,
                                             100000, seed++, {0.01});
      for (const auto& r : reps) {
        const double a = evaluate_zcb_moment(v[static_cast<std::size_t>(r.order - 1)], cfg.kernel,
                                             cfg.model, i, u, r0, r.s);
        worst = std::max(worst, std::fabs(r.estimate - a) / r.standard_error);
        ++checks;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 3.0 && secs < 120.0,
          std::to_string(checks) + " checks, max |z| = " + fmt("%.2f", worst) + " (limit 3), " +
              fmt("%.1f", secs) + " s (limit 120 s)"};
}

Outcome rate_cross_validation() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config(kConfigs / "testbed.json");
  const double r0 = 0.03;
  const std::vector<double> times{0.5, 1.0};
  const std::vector<double> lags{0.0, 0.5};
  const auto R = std::make_shared<const MomentSurface>(
      solve_rate_mean(cfg.kernel, cfg.model, cfg.solver));
  std::vector<MomentSurface> xi;
  for (double h : lags) {
    SolverConfig c = cfg.solver;
    c.horizon = c.step * std::round((c.horizon - h) / c.step);
    xi.push_back(solve_product_moment(h, cfg.kernel, cfg.model, c, R));
  }
  double worst = 0.0;
  std::size_t checks = 0;
  std::uint64_t seed = 500;
  for (std::size_t i = 0; i < cfg.kernel.size(); ++i) {
    for (double u : {0.0, 0.5}) {
      const auto pairs = estimate_rate_moments_grid(cfg.kernel, cfg.model, {i, u}, r0, times,
                                                    lags, 1000000, seed++, {HUGE_VAL});
      for (std::size_t a = 0; a < times.size(); ++a) {
        const auto& mean = pairs[a * lags.size()].first;
        const double am = evaluate_rate_mean(*R, cfg.kernel, cfg.model, i, u, r0, times[a]);
        worst = std::max(worst, std::fabs(mean.estimate - am) / mean.standard_error);
        ++checks;
        for (std::size_t b = 0; b < lags.size(); ++b) {
          const auto& prod = pairs[a * lags.size() + b].second;
          const double ap =
              evaluate_product_moment(xi[b], cfg.kernel, cfg.model, i, u, r0, times[a]);
          worst = std::max(worst, std::fabs(prod.estimate - ap) / prod.standard_error);
          ++checks;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 3.0 && secs < 180.0,
          std::to_string(checks) + " checks, max |z| = " + fmt("%.2f", worst) + " (limit 3), " +
              fmt("%.1f", secs) + " s (limit 180 s)"};
}

Outcome cir_identities() {
  const CirParams p{0.04, 1.0, 0.1};
  const auto model = RateModel::cir({p});
  bool unit = true;
  bool bitwise = true;
  double worst_rel = 0.0;
  for (double r0 : {0.0, 0.02, 0.07}) {
    for (double t : {0.0, 0.25, 1.0, 3.0, 5.0}) {
      unit = unit && cir_joint_laplace(p, r0, 0.0, 0.0, t) == 1.0;
      for (int n = 1; n <= 3; ++n) {
        bitwise = bitwise && bond_laplace(model, 0, r0, n, t) == cir_joint_laplace(p, r0, 0.0, n, t);
      }
      if (t > 0.0) {
        const double eps = 1e-7;
        const double slope = (cir_joint_laplace(p, r0, eps, 0.0, t) - 1.0) / eps;
        const double mean = transition_mean(model, 0, r0, t);
        worst_rel = std::max(worst_rel, std::fabs(-slope - mean) / mean);
      }
    }
  }
  return {unit && bitwise && worst_rel <= 1e-5,
          std::string("L(0,0,t) == 1: ") + (unit ? "yes" : "no") +
              "; bond == L(0,n,t) bitwise: " + (bitwise ? "yes" : "no") +
              "; max rel err of -dL/dlambda vs mean = " + fmt("%.2e", worst_rel) +
              " (limit 1e-5)"};
}

Outcome jensen() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  double worst = HUGE_VAL;
  std::size_t points = 0;
  for (const auto& f : files) {
    const auto cfg = load_config(f);
    const auto v1 = solve_zcb_moment(1, cfg.kernel, cfg.model, cfg.solver);
    const auto v2 = solve_zcb_moment(2, cfg.kernel, cfg.model, cfg.solver);
    for (std::size_t q = 0; q < v1.values().size(); ++q) {
      worst = std::min(worst, v2.values()[q] - v1.values()[q] * v1.values()[q]);
    }
    points += v1.values().size();
  }
  return {worst >= -1e-8, std::to_string(files.size()) + " configs, " + std::to_string(points) +
                              " lattice points, min V2 - V1^2 = " + fmt("%.3e", worst) +
                              " (limit -1e-8)"};
}

Outcome exact_step_ks() {
  const std::size_t n = 100000;
  const double dt = 0.5;
  std::ostringstream detail;
  bool ok = true;
  std::uint64_t seed = 800;
  for (const auto& model : {RateModel::vasicek({{0.5, 0.04, 0.02}}),
                            RateModel::cir({{0.04, 1.0, 0.1}})}) {
    std::vector<double> full(n);
    std::vector<double> half(n);
    const std::uint64_t s_full = seed++;
    const std::uint64_t s_half = seed++;
    for (std::size_t k = 0; k < n; ++k) {
      RngStream a(s_full, k);
      full[k] = exact_step(model, 0, 0.03, dt, a);
      RngStream b(s_half, k);
      half[k] = exact_step(model, 0, exact_step(model, 0, 0.03, dt / 2, b), dt / 2, b);
    }
    const double d = oracle::ks_statistic(full, half);
    const double crit = oracle::ks_critical(0.01, n, n);
    ok = ok && d < crit;
    detail << to_string(model.kind()) << " D = " << fmt("%.4f", d) << "; ";
  }
  detail << "critical value at 1% = " << fmt("%.4f", oracle::ks_critical(0.01, n, n));
  return {ok, detail.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / "smrate_acceptance_validate";
  fs::remove_all(dir);
  const auto cfg = kConfigs / "testbed.json";
  const int a = cli::run("validate", cfg, dir / "a", 20260417u);
  const int b = cli::run("validate", cfg, dir / "b", 20260417u);
  const auto ja = slurp(dir / "a" / "validation.json");
  const auto jb = slurp(dir / "b" / "validation.json");
  fs::remove_all(dir);
  const bool same = !ja.empty() && ja == jb;
  return {same, std::string("exit codes ") + std::to_string(a) + "/" + std::to_string(b) +
                    ", validation.json " + std::to_string(ja.size()) + " bytes, " +
                    (same ? "byte-identical" : "DIFFERENT")};
}

Outcome grid_convergence() {
  const SemiMarkovKernel k(1, {1.0}, {SD::weibull(1.5, 1.0)});
  const auto model = RateModel::vasicek({{0.5, 0.04, 0.02}});
  auto error_at = [&](double step) {
    SolverConfig cfg;
    cfg.step = step;
    cfg.horizon = 5.0;
    const auto v = solve_zcb_moment(1, k, model, cfg);
    const std::size_t stride = static_cast<std::size_t>(std::llround(0.01 / step));
    double worst = 0.0;
    for (std::size_t t = 0; t < v.time_grid().nodes(); t += stride) {
      for (std::size_t p = 0; p < v.rate_grid().nodes(); ++p) {
        const double exact = bond_laplace(model, 0, v.rate_grid().at(p), 1, v.time_grid().at(t));
        worst = std::max(worst, std::fabs(v.value(0, t, p) - exact));
      }
    }
    return worst;
  };
  const double coarse = error_at(0.01);
  const double fine = error_at(0.005);
  const double ratio = coarse / fine;
  return {ratio >= 1.5 && ratio <= 2.5,
          "max error " + fmt("%.3e", coarse) + " at h = 0.01, " + fmt("%.3e", fine) +
              " at h = 0.005, ratio = " + fmt("%.3f", ratio) + " (target [1.5, 2.5])"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> allowed;
  for (int a = 1; a < argc; ++a) {
    if (std::string(argv[a]) == "--allow-fail" && a + 1 < argc) allowed.insert(std::atoi(argv[++a]));
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"transition probabilities vs Markov oracle", phi_oracle},
      {"backward degeneracy at zero age", backward_degeneracy},
      {"single-regime collapse to closed form", single_regime},
      {"ZCB moments vs Monte Carlo", zcb_cross_validation},
      {"rate mean and product moment vs Monte Carlo", rate_cross_validation},
      {"CIR Laplace identities", cir_identities},
      {"Jensen gap on shipped configs", jensen},
      {"exact-step KS test", exact_step_ks},
      {"validate reproducibility", reproducibility},
      {"time-grid convergence ratio", grid_convergence},
  };
  int blocking = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c + 1);
    Outcome out;
    try {
      out = criteria[c].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const bool waived = !out.pass && allowed.count(id) > 0;
    std::cout << "criterion " << id << " [" << (out.pass ? "PASS" : "FAIL") << "] "
              << criteria[c].first << ": " << out.detail
              << (waived ? " (known limitation, not blocking)" : "") << std::endl;
    if (!out.pass && !waived) ++blocking;
  }
  return blocking;
}
