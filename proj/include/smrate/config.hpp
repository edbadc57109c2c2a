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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "smrate/moment_engine.hpp"
#include "smrate/rate_models.hpp"
#include "smrate/semi_markov.hpp"

namespace smrate {

/// A starting point (state, backward time, rate). States are 0-based here
/// and 1-based in configuration files.
struct StartPoint {
  std::size_t state = 0;
  double backward = 0.0;
  double r0 = 0.0;
};

struct PhiSection {
  double step = 0.005;
  double horizon = 5.0;
  double backward = 0.0;
};

struct MomentsSection {
  std::vector<int> orders{1, 2};
  std::vector<double> lags{0.0};
  /// Points at which surfaces are also evaluated (with backward time).
  std::vector<StartPoint> evaluate;
  std::vector<double> times;
};

struct SimulateSection {
  StartPoint start;
  double horizon = 1.0;
  double step = 0.01;
  std::size_t paths = 1;
  std::size_t replications = 10000;
  std::size_t rate_replications = 100000;
  std::vector<int> orders{1};
  std::vector<double> times{0.5};
  std::vector<double> lags{0.0};
  bool antithetic = false;
  double z_threshold = 3.0;
};

struct ValidateSection {
  std::vector<std::size_t> states{0};
  std::vector<double> backward{0.0};
  double r0 = 0.0;
  std::vector<int> orders{1, 2};
  std::vector<double> times{0.5, 1.0};
  std::vector<double> rate_times{0.5, 1.0};
  std::vector<double> lags{0.0};
  std::vector<double> occupancy_times{};
  std::size_t zcb_replications = 100000;
  std::size_t rate_replications = 1000000;
  std::size_t occupancy_replications = 100000;
  double step = 0.01;
  double z_threshold = 3.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  SemiMarkovKernel kernel;
  RateModel model;
  SolverConfig solver;
  PhiSection phi;
  MomentsSection moments;
  SimulateSection simulate;
  ValidateSection validate;
  /// FNV-1a 64 hash of the source text, as 16 hex digits.
  std::string hash;
  /// Compact JSON echo of the parsed document.
  std::string canonical;
};

/// Parses a JSON experiment. Throws ConfigError naming the line/column of a
/// syntax error or the path of the offending field.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace smrate
