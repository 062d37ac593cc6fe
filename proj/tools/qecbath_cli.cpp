// Copyright 2026 The qecbath Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qecbath: simulate | sweep | critical-time | validate-codes

#include <CLI11.hpp>

#include <string>
#include <vector>

#include "qecbath/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Qubit registers in thermal baths, with and without error correction"};
  app.require_subcommand(1);
  struct Args {
    std::string config;
    std::vector<std::string> sets;
  };
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "fidelity against time for one configuration"},
      {"sweep", "cartesian parameter grid, flushed row by row and resumable"},
      {"critical-time", "kappa t at the first crossing of the corrected and bare fidelities"},
      {"validate-codes", "brute-force check of every code's correction table"}};
  std::vector<Args> args(commands.size());
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, commands[i].second);
    sub->add_option("--config", args[i].config, "JSON config file (defaults apply when omitted)");
    sub->add_option("--set", args[i].sets, "override one key: --set key=value (repeatable)")
        ->allow_extra_args(false);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? qecbath::kExitOk : qecbath::kExitUsage;
  }
  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (app.got_subcommand(commands[i].first)) {
      return qecbath::run_command(commands[i].first, args[i].config, args[i].sets);
    }
  }
  return qecbath::kExitUsage;
}
