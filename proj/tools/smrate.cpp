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

// smrate: batch front-end for the transition-probability solver, the moment
// engine and the Monte Carlo cross-checks.
//
//   smrate phi      --config exp.json --out dir
//   smrate moments  --config exp.json --out dir
//   smrate simulate --config exp.json --out dir [--seed N]
//   smrate validate --config exp.json --out dir [--seed N]

#include <CLI11.hpp>
#include <cstdint>
#include <optional>
#include <string>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Moments of discount factors under semi-Markov regime-switching short rates"};
  app.require_subcommand(1);

  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;

  for (const char* name : {"phi", "moments", "simulate", "validate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "Experiment JSON file")->required();
    sub->add_option("--out", out, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override the config seed");
  }
  app.footer("Exit codes: 0 ok, 1 runtime error, 2 config error, 3 numeric error, "
             "4 validation failure.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return smrate::cli::kConfigError;
  }
  const auto* chosen = app.get_subcommands().front();
  return smrate::cli::run(chosen->get_name(), config, out, seed);
}
