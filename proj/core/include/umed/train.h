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

#ifndef UMED_TRAIN_H_
#define UMED_TRAIN_H_

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "umed/core.h"
#include "umed/nets.h"
#include "umed/perturb.h"

namespace umed {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 16;
  double lr_surrogate = 1e-4;
  double lr_generator = 1e-4;
  double lr_exploiter = 1e-4;
  RngSeed seed{0};
  int schedule_modulus = 5;
  double grad_clip = 5.0;  // global norm; <= 0 disables
  // When set, a JSON description of the failing step is written here before
  // NumericalError is thrown.
  std::filesystem::path failure_dump_dir;

  static TrainConfig umed_defaults() { return {}; }
  static TrainConfig exploiter_defaults() {
    TrainConfig c;
    c.epochs = 150;
    c.batch_size = 32;
    return c;
  }
  void validate() const;
};

struct LogRecord {
  int epoch = 0;
  std::string split = "train";
  double loss = 0.0;
  std::string updated_component;  // "generators", "surrogate" or "exploiter"

  nlohmann::json to_json() const;
  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct TrainLog {
  std::vector<LogRecord> records;
  long surrogate_steps = 0;
  long generator_steps = 0;
  long exploiter_steps = 0;

  void write_jsonl(const std::filesystem::path& path) const;
};

/// Called after every epoch, e.g. to stream JSON lines.
using LogSink = std::function<void(const LogRecord&)>;

struct UmedTrainResult {
  ProtectorState state;
  NetSpec surrogate_spec;
  ModelParams<float> surrogate;
  TrainLog log;
};

/// Alternating optimization: in epoch i (1-based), every batch updates both
/// generators when i % modulus != 0 and the surrogate otherwise.
/// `initial` supplies generator specs/params and the perturbation settings.
UmedTrainResult train_umed(std::span<const Sample> data, const TrainConfig& cfg,
                           const NetSpec& surrogate_spec, ProtectorState initial,
                           const LogSink& sink = {});

struct EmConfig {
  int rounds = 10;
  int steps = 10;                // K
  double step_fraction = 0.2;    // alpha = step_fraction * epsilon
  EmRegion region = EmRegion::kFull;
};

struct EmTrainResult {
  ProtectorState state;
  ModelParams<float> surrogate;
  TrainLog log;
};

/// Sample-wise error-minimizing noise: `rounds` repetitions of one surrogate
/// epoch on x + delta followed by one sweep of em_update over all samples.
EmTrainResult train_em(std::span<const Sample> data, const TrainConfig& cfg,
                       const NetSpec& surrogate_spec, Epsilon epsilon,
                       const EmConfig& em, ContourBandSpec band = {},
                       const LogSink& sink = {});

struct ExploiterResult {
  ModelParams<float> params;
  TrainLog log;
};

ExploiterResult train_exploiter(std::span<const Sample> data, const NetSpec& spec,
                                const TrainConfig& cfg, const LogSink& sink = {});

struct AdversarialConfig {
  Epsilon epsilon{4, 255};
  int steps = 7;
  double step_size = 1.0 / 255.0;
  bool random_start = true;
};

/// Each batch is replaced by a PGD perturbation that maximizes seg_loss under
/// the current parameters before the gradient step.
ExploiterResult train_exploiter_adversarial(std::span<const Sample> data,
                                            const NetSpec& spec,
                                            const TrainConfig& cfg,
                                            const AdversarialConfig& adv,
                                            const LogSink& sink = {});

/// L-inf PGD ascent on seg_loss; result stays in [0, 1] and within epsilon of
/// `images`. steps == 0 returns `images` unchanged. The network's parameters
/// are frozen during the attack and their trainable flag restored afterwards.
nn::Tensor<float> pgd_attack(Network<float>& net,
                             const nn::Tensor<float>& images,
                             const nn::Tensor<float>& masks,
                             const AdversarialConfig& adv, Rng& rng);

/// Fixed-order batches after a seeded shuffle for `epoch`.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count,
                                                    int batch_size, RngSeed seed,
                                                    int epoch);

}  // namespace umed

#endif  // UMED_TRAIN_H_
