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

#ifndef UMED_TOOLS_CONFIG_H_
#define UMED_TOOLS_CONFIG_H_

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "umed/dataio.h"
#include "umed/matrix.h"

namespace umed::cli {

/// Every accepted key with its default value. Files, environment variables and
/// command-line overrides may only set keys present here.
nlohmann::json default_config();

using EnvLookup = std::function<const char*(const std::string&)>;

/// Layers defaults < file < environment < command line. `overrides` are
/// dotted key paths with textual values, e.g. {"train.epochs", "5"}.
/// Environment names are UMED_ + the upper-cased path with "." as "__".
/// Throws ConfigError on unknown keys or values of the wrong type.
nlohmann::json resolve_config(
    const std::filesystem::path& file,
    const std::vector<std::pair<std::string, std::string>>& overrides,
    const EnvLookup& env);

/// "UMED_TRAIN__EPOCHS" for "train.epochs".
std::string env_name(const std::string& dotted);

/// Pairs up "--a.b value" and "--a.b=value" tokens.
std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& tokens);

// Typed views of a resolved config.
SynthSpec synth_spec(const nlohmann::json& cfg);
LoadOptions load_options(const nlohmann::json& cfg);
SaveOptions save_options(const nlohmann::json& cfg);
ProtectorSettings protector_settings(const nlohmann::json& cfg);
ExploiterSettings exploiter_settings(const nlohmann::json& cfg);
DefenseSettings defense_settings(const nlohmann::json& cfg);

}  // namespace umed::cli

#endif  // UMED_TOOLS_CONFIG_H_
