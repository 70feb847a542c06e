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

#ifndef UMED_TOOLS_CHART_H_
#define UMED_TOOLS_CHART_H_

#include <filesystem>
#include <span>

#include "umed/matrix.h"

namespace umed::cli {

/// Bar per cell (mean clean-test DSC on a 0..1 axis), bars colored by
/// protector, failed cells drawn as short red stubs. Cell order is kept.
void write_dsc_chart(const std::filesystem::path& path,
                     std::span<const MatrixCell> cells);

}  // namespace umed::cli

#endif  // UMED_TOOLS_CHART_H_
