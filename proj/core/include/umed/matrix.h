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

#ifndef UMED_MATRIX_H_
#define UMED_MATRIX_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "umed/dataio.h"
#include "umed/eval.h"
#include "umed/train.h"

namespace umed {

struct ProtectorSettings {
  Epsilon epsilon;
  ContourBandSpec band;
  LbpConfig lbp;
  float texture_floor = 0.1f;
  NetSpec surrogate;               // F_s, plain U-Net by default
  int generator_depth = 4;
  int generator_base_channels = 16;
  TrainConfig umed_train = TrainConfig::umed_defaults();
  TrainConfig em_train = TrainConfig::umed_defaults();
  EmConfig em;
};

struct ExploiterSettings {
  int depth = 4;
  int base_channels = 16;
  TrainConfig train = TrainConfig::exploiter_defaults();
};

struct DefenseSettings {
  int jpeg_quality = 60;
  int blur_kernel = 3;
  double blur_sigma = 0.8;
  AdversarialConfig adversarial;
};

/// Protector names: none, umed, em, and the ablations umed_contour_only,
/// umed_texture_only, umed_vanilla_contour, umed_fixed_texture, em_contour,
/// em_roi. Exploiters are architecture names. Defenses: none, blur, jpeg, adv.
struct MatrixConfig {
  std::vector<std::string> protectors{"none", "umed"};
  std::vector<std::string> exploiters{"unet"};
  std::vector<std::string> defenses{"none"};
  ProtectorSettings protector;
  ExploiterSettings exploiter;
  DefenseSettings defense;
};

const std::vector<std::string>& known_protectors();
const std::vector<std::string>& known_defenses();

struct TrainedProtector {
  ProtectorState state;
  TrainLog log;
};

/// Trains (or, for "none", simply builds) the named protector on `train`.
TrainedProtector build_protector(const std::string& name,
                                 std::span<const Sample> train,
                                 const ProtectorSettings& settings,
                                 const LogSink& sink = {});

/// Input-space defenses ("none", "blur", "jpeg") applied to every image;
/// masks are left untouched. "adv" is a training-time defense and is rejected.
std::vector<Sample> apply_defense(const std::string& name,
                                  std::span<const Sample> samples,
                                  const DefenseSettings& settings);

NetSpec exploiter_spec(const std::string& arch, int channels,
                       const ExploiterSettings& settings);

/// Trains an exploiter, adversarially when defense == "adv"; other defenses
/// are applied to the training images first.
ExploiterResult train_defended_exploiter(std::span<const Sample> train,
                                         const NetSpec& spec,
                                         const std::string& defense,
                                         const ExploiterSettings& exploiter,
                                         const DefenseSettings& settings,
                                         const LogSink& sink = {});

struct MatrixCell {
  std::string protector;
  std::string exploiter;
  std::string defense;
  bool ok = false;
  std::string error;
  SegmentationScores segmentation;  // on the clean test split
  InvisibilityScores invisibility;  // protected vs clean training images
  double seconds = 0.0;

  nlohmann::json to_json(bool per_sample = true) const;
  static MatrixCell from_json(const nlohmann::json& j);
};

/// Runs cells of the protector x exploiter x defense product, caching each
/// protected training set. Failed cells are recorded, not thrown.
class MatrixRunner {
 public:
  MatrixRunner(MatrixConfig config, const Dataset& data);

  std::vector<MatrixCell> run();
  MatrixCell run_cell(const std::string& protector, const std::string& exploiter,
                      const std::string& defense);

  /// Protected training split for `protector` (built on first use).
  const std::vector<ProtectedSample>& protected_train(const std::string& protector);
  const ProtectorState& protector_state(const std::string& protector);

  const MatrixConfig& config() const { return config_; }

 private:
  struct Entry {
    TrainedProtector trained;
    std::vector<ProtectedSample> samples;
  };
  Entry& entry(const std::string& protector);

  MatrixConfig config_;
  const Dataset& data_;
  std::map<std::string, Entry> cache_;
};

std::vector<MatrixCell> run_matrix(const MatrixConfig& config, const Dataset& data);

/// One row per cell with metric columns.
void write_matrix_csv(const std::filesystem::path& path,
                      std::span<const MatrixCell> cells);
/// One row per cell per metric.
void write_matrix_long_csv(const std::filesystem::path& path,
                           std::span<const MatrixCell> cells);

}  // namespace umed

#endif  // UMED_MATRIX_H_
