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

#include <cstdint>
#include <filesystem>
#include <optional>

#include "smrate/config.hpp"

namespace smrate::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kNumericError = 3,
  kValidationFailed = 4,
};

/// Writes phi.csv.
int cmd_phi(const ExperimentConfig& config, const std::filesystem::path& out);

/// Writes one CSV per lattice quantity plus jensen.csv and, when
/// evaluation points are configured, evaluations.csv.
int cmd_moments(const ExperimentConfig& config, const std::filesystem::path& out);

/// Writes paths.csv and estimates.json.
int cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out);

/// Writes validation.json; returns kValidationFailed when any check fails.
int cmd_validate(const ExperimentConfig& config, const std::filesystem::path& out);

/// Loads the config, applies the seed override, dispatches and maps
/// exceptions to exit codes. Diagnostics go to stderr.
int run(const std::string& command, const std::filesystem::path& config_path,
        const std::filesystem::path& out, std::optional<std::uint64_t> seed);

}  // namespace smrate::cli
