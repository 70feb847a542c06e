// Copyright 2026 The UMedKit Authors
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

#include <cstdlib>
#include <functional>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "commands.h"
#include "config.h"
#include "umed/core.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Command {
  const char* help;
  std::function<void(const nlohmann::json&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace umed::cli;
  const std::map<std::string, Command> commands = {
      {"synth", {"Generate a synthetic segmentation dataset", cmd_synth}},
      {"protect", {"Train a protector and write the protected training split", cmd_protect}},
      {"train", {"Train an exploiter on a (protected) training split", cmd_train}},
      {"defend", {"Train an exploiter behind the configured defense", cmd_defend}},
      {"eval", {"Score a trained exploiter and the protected images", cmd_eval}},
      {"report", {"Merge finished evaluation cells into CSV tables and a chart", cmd_report}},
  };

  CLI::App app{"Segmentation data protection toolkit.\n"
               "Any config key can be overridden with --dotted.key value or the\n"
               "UMED_DOTTED__KEY environment variable (command line wins)."};
  app.require_subcommand(1);
  std::string config_file;
  bool print_config = false;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, cmd] : commands) {
    CLI::App* sub = app.add_subcommand(name, cmd.help);
    sub->allow_extras();
    sub->add_option("-c,--config", config_file, "JSON config file");
    sub->add_flag("--print-config", print_config, "Print the effective config and exit");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      const auto overrides = parse_overrides(sub->remaining());
      const nlohmann::json cfg = resolve_config(
          config_file, overrides, [](const std::string& k) { return std::getenv(k.c_str()); });
      if (print_config) {
        fmt::print("{}\n", cfg.dump(2));
        return 0;
      }
      commands.at(name).run(cfg);
      return 0;
    } catch (const umed::NumericalError& e) {
      fmt::print(stderr, "numerical failure: {}\n", e.what());
      return kExitNumerical;
    } catch (const umed::Error& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return kExitConfig;
    } catch (const std::invalid_argument& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return kExitConfig;
    } catch (const std::exception& e) {
      fmt::print(stderr, "internal error: {}\n", e.what());
      return 1;
    }
  }
  return kExitConfig;
}
