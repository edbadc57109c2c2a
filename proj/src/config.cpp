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

#include "smrate/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>

#include "smrate/error.hpp"
#include "smrate/io.hpp"

namespace smrate {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string at(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at(const std::string& path, std::size_t idx) {
  return path + "[" + std::to_string(idx) + "]";
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  expect_object(j, path);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(at(path, key), "unknown field");
    }
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(at(path, key), "missing required field");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "expected a finite number");
  return x;
}

std::uint64_t unsigned_integer(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  fail(path, "expected a non-negative integer");
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

template <class F>
auto array_of(const json& j, const std::string& path, F&& item) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<decltype(item(j, path))> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(item(j[k], at(path, k)));
  return out;
}

template <class T, class F>
void optional(const json& j, const std::string& path, const char* key, T& target, F&& read) {
  if (j.contains(key)) target = read(j.at(key), at(path, key));
}

std::size_t state_index(const json& j, const std::string& path, std::size_t m) {
  const auto s = unsigned_integer(j, path);
  if (s < 1 || s > m) fail(path, "state must lie in 1.." + std::to_string(m));
  return static_cast<std::size_t>(s - 1);
}

// --- kernel -------------------------------------------------------------------

SojournDistribution sojourn(const json& j, const std::string& path) {
  expect_object(j, path);
  const std::string family = string(require(j, path, "family"), at(path, "family"));
  auto param = [&](const char* key) { return number(require(j, path, key), at(path, key)); };
  try {
    if (family == "exponential") {
      check_keys(j, path, {"family", "rate"});
      return SojournDistribution::exponential(param("rate"));
    }
    if (family == "weibull") {
      check_keys(j, path, {"family", "shape", "scale"});
      return SojournDistribution::weibull(param("shape"), param("scale"));
    }
    if (family == "gamma") {
      check_keys(j, path, {"family", "shape", "scale"});
      return SojournDistribution::gamma(param("shape"), param("scale"));
    }
    if (family == "uniform") {
      check_keys(j, path, {"family", "lower", "upper"});
      return SojournDistribution::uniform(param("lower"), param("upper"));
    }
  } catch (const ArgumentError& e) {
    fail(path, e.what());
  }
  fail(at(path, "family"), "unknown sojourn family '" + family +
                               "' (exponential, weibull, gamma, uniform)");
}

SemiMarkovKernel kernel(const json& j, const std::string& path) {
  check_keys(j, path, {"states", "embedded", "sojourn"});
  const json& states = require(j, path, "states");
  std::vector<std::string> names;
  std::size_t m = 0;
  if (states.is_array()) {
    names = array_of(states, at(path, "states"), string);
    m = names.size();
  } else {
    m = static_cast<std::size_t>(unsigned_integer(states, at(path, "states")));
  }
  if (m == 0) fail(at(path, "states"), "need at least one state");
  const std::string ep = at(path, "embedded");
  const json& emb = require(j, path, "embedded");
  if (!emb.is_array() || emb.size() != m) fail(ep, "expected " + std::to_string(m) + " rows");
  std::vector<double> P;
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = array_of(emb[i], at(ep, i), number);
    if (row.size() != m) fail(at(ep, i), "expected " + std::to_string(m) + " entries");
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) fail(at(ep, i), "probabilities must be >= 0");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12 && sum != 0.0) {
      std::ostringstream msg;
      msg << "row sums to " << sum << "; must sum to 1 (or 0 for an absorbing state)";
      fail(at(ep, i), msg.str());
    }
    P.insert(P.end(), row.begin(), row.end());
  }
  const std::string sp = at(path, "sojourn");
  const json& soj = require(j, path, "sojourn");
  if (!soj.is_array() || soj.size() != m) fail(sp, "expected " + std::to_string(m) + " rows");
  std::vector<std::optional<SojournDistribution>> G;
  for (std::size_t i = 0; i < m; ++i) {
    const std::string rp = at(sp, i);
    if (!soj[i].is_array() || soj[i].size() != m) {
      fail(rp, "expected " + std::to_string(m) + " entries");
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (soj[i][k].is_null()) {
        G.emplace_back(std::nullopt);
      } else {
        G.emplace_back(sojourn(soj[i][k], at(rp, k)));
      }
    }
  }
  try {
    return SemiMarkovKernel(m, std::move(P), std::move(G), std::move(names));
  } catch (const ArgumentError& e) {
    fail(path, e.what());
  }
}

// --- model ----------------------------------------------------------------------

PiecewiseLinear table(const json& j, const std::string& path, std::optional<double> horizon) {
  try {
    if (j.is_number()) {
      if (!horizon) fail(path, "a constant needs the regime field 'horizon'");
      return PiecewiseLinear::constant(number(j, path), *horizon);
    }
    auto knots = array_of(j, path, [](const json& k, const std::string& p) {
      if (!k.is_array() || k.size() != 2) fail(p, "expected a [t, value] pair");
      return std::make_pair(number(k[0], at(p, 0)), number(k[1], at(p, 1)));
    });
    return PiecewiseLinear(std::move(knots));
  } catch (const ArgumentError& e) {
    fail(path, e.what());
  }
}

RateModel model(const json& j, const std::string& path, std::size_t m) {
  check_keys(j, path, {"kind", "regimes"});
  const std::string kind = string(require(j, path, "kind"), at(path, "kind"));
  const std::string rp = at(path, "regimes");
  const json& regimes = require(j, path, "regimes");
  if (!regimes.is_array() || regimes.size() != m) {
    fail(rp, "expected one regime per kernel state (" + std::to_string(m) + ")");
  }
  try {
    if (kind == "vasicek" || kind == "cir") {
      std::vector<VasicekParams> vas;
      std::vector<CirParams> cir;
      for (std::size_t i = 0; i < m; ++i) {
        const std::string p = at(rp, i);
        check_keys(regimes[i], p, {"a", "b", "sigma"});
        const double a = number(require(regimes[i], p, "a"), at(p, "a"));
        const double b = number(require(regimes[i], p, "b"), at(p, "b"));
        const double s = number(require(regimes[i], p, "sigma"), at(p, "sigma"));
        vas.push_back({a, b, s});
        cir.push_back({a, b, s});
      }
      return kind == "vasicek" ? RateModel::vasicek(vas) : RateModel::cir(cir);
    }
    if (kind == "hull_white") {
      std::vector<HullWhiteParams> hw;
      for (std::size_t i = 0; i < m; ++i) {
        const std::string p = at(rp, i);
        check_keys(regimes[i], p, {"alpha", "beta", "sigma", "horizon"});
        std::optional<double> horizon;
        if (regimes[i].contains("horizon")) {
          horizon = number(regimes[i].at("horizon"), at(p, "horizon"));
        }
        hw.push_back({table(require(regimes[i], p, "alpha"), at(p, "alpha"), horizon),
                      table(require(regimes[i], p, "beta"), at(p, "beta"), horizon),
                      table(require(regimes[i], p, "sigma"), at(p, "sigma"), horizon)});
      }
      return RateModel::hull_white(hw);
    }
  } catch (const ArgumentError& e) {
    fail(rp, e.what());
  }
  fail(at(path, "kind"), "unknown model kind '" + kind + "' (vasicek, hull_white, cir)");
}

// --- sections -------------------------------------------------------------------

SolverConfig solver(const json& j, const std::string& path) {
  SolverConfig c;
  if (j.is_null()) return c;
  check_keys(j, path,
             {"step", "horizon", "rate_grid", "quadrature_order", "coverage_tolerance",
              "consistency_tolerance", "coupling", "execution"});
  optional(j, path, "step", c.step, number);
  optional(j, path, "horizon", c.horizon, number);
  if (!(c.step > 0.0)) fail(at(path, "step"), "must be > 0");
  if (!(c.horizon > 0.0)) fail(at(path, "horizon"), "must be > 0");
  const double ratio = c.horizon / c.step;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    fail(at(path, "horizon"), "must be a multiple of solver.step");
  }
  if (j.contains("rate_grid")) {
    const std::string gp = at(path, "rate_grid");
    const json& g = j.at("rate_grid");
    check_keys(g, gp, {"lower", "upper", "nodes"});
    if (g.contains("lower")) c.rate_grid.lower = number(g.at("lower"), at(gp, "lower"));
    if (g.contains("upper")) c.rate_grid.upper = number(g.at("upper"), at(gp, "upper"));
    if (g.contains("nodes")) {
      c.rate_grid.nodes = static_cast<std::size_t>(unsigned_integer(g.at("nodes"), at(gp, "nodes")));
    }
    if (c.rate_grid.nodes < 2) fail(at(gp, "nodes"), "need at least 2 nodes");
    if (c.rate_grid.lower && c.rate_grid.upper && !(*c.rate_grid.upper > *c.rate_grid.lower)) {
      fail(gp, "upper must exceed lower");
    }
  }
  optional(j, path, "quadrature_order", c.quadrature_order, integer);
  if (c.quadrature_order < 1 || c.quadrature_order > 64) {
    fail(at(path, "quadrature_order"), "must lie in 1..64");
  }
  optional(j, path, "coverage_tolerance", c.coverage_tolerance, number);
  if (c.coverage_tolerance < 0.0) fail(at(path, "coverage_tolerance"), "must be >= 0");
  optional(j, path, "consistency_tolerance", c.consistency_tolerance, number);
  if (j.contains("coupling")) {
    const auto v = string(j.at("coupling"), at(path, "coupling"));
    if (v == "joint") {
      c.coupling = Coupling::Joint;
    } else if (v == "factorized") {
      c.coupling = Coupling::Factorized;
    } else {
      fail(at(path, "coupling"), "expected 'joint' or 'factorized'");
    }
  }
  if (j.contains("execution")) {
    const auto v = string(j.at("execution"), at(path, "execution"));
    if (v == "serial") {
      c.execution = Execution::Serial;
    } else if (v == "parallel") {
      c.execution = Execution::Parallel;
    } else {
      fail(at(path, "execution"), "expected 'serial' or 'parallel'");
    }
  }
  return c;
}

std::vector<double> times_in(const json& j, const std::string& path, double limit,
                             const char* limit_name) {
  auto out = array_of(j, path, number);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k] < 0.0) fail(at(path, k), "must be >= 0");
    if (out[k] > limit * (1.0 + 1e-12)) {
      fail(at(path, k), std::string("exceeds ") + limit_name);
    }
  }
  return out;
}

std::vector<int> orders_in(const json& j, const std::string& path) {
  auto out = array_of(j, path, integer);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k] < 1) fail(at(path, k), "moment order must be >= 1");
  }
  return out;
}

std::vector<double> lags_in(const json& j, const std::string& path, const SolverConfig& s) {
  auto out = times_in(j, path, s.horizon, "solver.horizon");
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double ratio = out[k] / s.step;
    if (std::fabs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      fail(at(path, k), "lag must be a multiple of solver.step");
    }
    if (out[k] >= s.horizon) fail(at(path, k), "lag must be below solver.horizon");
  }
  return out;
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

std::size_t replications(const json& j, const std::string& path) {
  const auto n = unsigned_integer(j, path);
  if (n < 100) fail(path, "need at least 100 replications");
  return static_cast<std::size_t>(n);
}

PhiSection phi(const json& j, const std::string& path) {
  PhiSection s;
  if (j.is_null()) return s;
  check_keys(j, path, {"step", "horizon", "backward"});
  optional(j, path, "step", s.step, number);
  optional(j, path, "horizon", s.horizon, number);
  optional(j, path, "backward", s.backward, number);
  if (!(s.step > 0.0)) fail(at(path, "step"), "must be > 0");
  if (!(s.horizon > 0.0)) fail(at(path, "horizon"), "must be > 0");
  if (s.backward < 0.0) fail(at(path, "backward"), "must be >= 0");
  const double ratio = s.horizon / s.step;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    fail(at(path, "horizon"), "must be a multiple of phi.step");
  }
  return s;
}

StartPoint start_point(const json& j, const std::string& path, std::size_t m) {
  check_keys(j, path, {"state", "backward", "r0"});
  StartPoint p;
  p.state = state_index(require(j, path, "state"), at(path, "state"), m);
  optional(j, path, "backward", p.backward, number);
  if (p.backward < 0.0) fail(at(path, "backward"), "must be >= 0");
  p.r0 = number(require(j, path, "r0"), at(path, "r0"));
  return p;
}

MomentsSection moments(const json& j, const std::string& path, const SolverConfig& s,
                       std::size_t m) {
  MomentsSection out;
  if (j.is_null()) return out;
  check_keys(j, path, {"orders", "lags", "evaluate", "times"});
  optional(j, path, "orders", out.orders, orders_in);
  if (j.contains("lags")) out.lags = lags_in(j.at("lags"), at(path, "lags"), s);
  if (j.contains("evaluate")) {
    out.evaluate = array_of(j.at("evaluate"), at(path, "evaluate"),
                            [m](const json& e, const std::string& p) { return start_point(e, p, m); });
  }
  if (j.contains("times")) {
    out.times = times_in(j.at("times"), at(path, "times"), s.horizon - max_of(out.lags),
                         "solver.horizon minus the largest lag");
  }
  return out;
}

SimulateSection simulate(const json& j, const std::string& path, const SolverConfig& s,
                         std::size_t m) {
  SimulateSection out;
  if (j.is_null()) return out;
  check_keys(j, path,
             {"state", "backward", "r0", "horizon", "step", "paths", "replications",
              "rate_replications", "orders", "times", "lags", "antithetic", "z_threshold"});
  if (j.contains("state")) out.start.state = state_index(j.at("state"), at(path, "state"), m);
  optional(j, path, "backward", out.start.backward, number);
  optional(j, path, "r0", out.start.r0, number);
  optional(j, path, "horizon", out.horizon, number);
  optional(j, path, "step", out.step, number);
  if (out.start.backward < 0.0) fail(at(path, "backward"), "must be >= 0");
  if (out.horizon < 0.0) fail(at(path, "horizon"), "must be >= 0");
  if (!(out.step > 0.0)) fail(at(path, "step"), "must be > 0");
  if (j.contains("paths")) {
    out.paths = static_cast<std::size_t>(unsigned_integer(j.at("paths"), at(path, "paths")));
  }
  optional(j, path, "replications", out.replications, replications);
  optional(j, path, "rate_replications", out.rate_replications, replications);
  optional(j, path, "orders", out.orders, orders_in);
  if (j.contains("lags")) out.lags = lags_in(j.at("lags"), at(path, "lags"), s);
  if (j.contains("times")) {
    out.times = times_in(j.at("times"), at(path, "times"), s.horizon - max_of(out.lags),
                         "solver.horizon minus the largest lag");
  }
  optional(j, path, "antithetic", out.antithetic, boolean);
  optional(j, path, "z_threshold", out.z_threshold, number);
  if (out.z_threshold < 0.0) fail(at(path, "z_threshold"), "must be >= 0");
  return out;
}

ValidateSection validate(const json& j, const std::string& path, const SolverConfig& s,
                         std::size_t m) {
  ValidateSection out;
  if (j.is_null()) return out;
  check_keys(j, path,
             {"states", "backward", "r0", "orders", "times", "rate_times", "lags",
              "occupancy_times", "zcb_replications", "rate_replications",
              "occupancy_replications", "step", "z_threshold"});
  if (j.contains("states")) {
    out.states = array_of(j.at("states"), at(path, "states"),
                          [m](const json& e, const std::string& p) { return state_index(e, p, m); });
  }
  if (j.contains("backward")) {
    out.backward = array_of(j.at("backward"), at(path, "backward"), number);
    for (std::size_t k = 0; k < out.backward.size(); ++k) {
      if (out.backward[k] < 0.0) fail(at(at(path, "backward"), k), "must be >= 0");
    }
  }
  optional(j, path, "r0", out.r0, number);
  optional(j, path, "orders", out.orders, orders_in);
  if (j.contains("times")) {
    out.times = times_in(j.at("times"), at(path, "times"), s.horizon, "solver.horizon");
  }
  if (j.contains("lags")) out.lags = lags_in(j.at("lags"), at(path, "lags"), s);
  if (j.contains("rate_times")) {
    out.rate_times = times_in(j.at("rate_times"), at(path, "rate_times"),
                              s.horizon - max_of(out.lags), "solver.horizon minus the largest lag");
  }
  if (j.contains("occupancy_times")) {
    out.occupancy_times = times_in(j.at("occupancy_times"), at(path, "occupancy_times"),
                                   s.horizon, "solver.horizon");
  }
  optional(j, path, "zcb_replications", out.zcb_replications, replications);
  optional(j, path, "rate_replications", out.rate_replications, replications);
  optional(j, path, "occupancy_replications", out.occupancy_replications, replications);
  optional(j, path, "step", out.step, number);
  if (!(out.step > 0.0)) fail(at(path, "step"), "must be > 0");
  optional(j, path, "z_threshold", out.z_threshold, number);
  if (out.z_threshold < 0.0) fail(at(path, "z_threshold"), "must be >= 0");
  return out;
}

const json& section(const json& doc, const char* key) {
  static const json kNull;
  return doc.contains(key) ? doc.at(key) : kNull;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.what() carries "line L, column C".
    throw ConfigError(std::string("syntax error: ") + e.what());
  }
  check_keys(doc, "", {"seed", "kernel", "model", "solver", "phi", "moments", "simulate",
                       "validate", "description"});
  auto kern = kernel(require(doc, "", "kernel"), "kernel");
  auto mod = model(require(doc, "", "model"), "model", kern.size());
  const auto solv = solver(section(doc, "solver"), "solver");
  const std::size_t m = kern.size();
  ExperimentConfig cfg{
      .seed = doc.contains("seed") ? unsigned_integer(doc.at("seed"), "seed") : 0,
      .kernel = std::move(kern),
      .model = std::move(mod),
      .solver = solv,
      .phi = phi(section(doc, "phi"), "phi"),
      .moments = moments(section(doc, "moments"), "moments", solv, m),
      .simulate = simulate(section(doc, "simulate"), "simulate", solv, m),
      .validate = validate(section(doc, "validate"), "validate", solv, m),
      .hash = io::hex64(io::fnv1a64(text)),
      .canonical = doc.dump(),
  };
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace smrate
