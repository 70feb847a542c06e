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

#ifndef UMED_TOOLS_COMMANDS_H_
#define UMED_TOOLS_COMMANDS_H_

#include <nlohmann/json.hpp>

namespace umed::cli {

// Each command reads a resolved config, writes its artifacts under
// cfg["out"] together with the effective config, and throws umed::Error
// subclasses on failure.
void cmd_synth(const nlohmann::json& cfg);
void cmd_protect(const nlohmann::json& cfg);
void cmd_train(const nlohmann::json& cfg);
void cmd_defend(const nlohmann::json& cfg);
void cmd_eval(const nlohmann::json& cfg);
void cmd_report(const nlohmann::json& cfg);

}  // namespace umed::cli

#endif  // UMED_TOOLS_COMMANDS_H_
