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

#ifndef UMED_DATAIO_H_
#define UMED_DATAIO_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "umed/core.h"
#include "umed/perturb.h"

namespace umed {

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;

  int channels() const;
  int image_size() const;  // height of the first sample, 0 when empty
};

// ---- synthetic data ----

enum class ShapeFamily { kEllipse, kBlob, kMixed };
std::string_view shape_family_name(ShapeFamily f);
ShapeFamily parse_shape_family(std::string_view name);

/// Random smooth ROIs on a textured background. Intensity ranges are drawn per
/// sample; gratings are sinusoids with random orientation and phase.
struct SynthSpec {
  int n_samples = 200;
  int size = 64;
  int channels = 1;
  ShapeFamily shapes = ShapeFamily::kMixed;
  double radius_min = 0.15;  // fraction of size
  double radius_max = 0.30;
  double background_min = 0.35;
  double background_max = 0.55;
  double contrast_min = 0.10;  // |foreground - background| level offset
  double contrast_max = 0.20;
  bool random_polarity = false;  // false: ROI darker than the background
  double interior_amplitude = 0.06;
  double interior_freq_min = 0.15;  // cycles per pixel
  double interior_freq_max = 0.30;
  double background_amplitude = 0.06;
  double background_freq_min = 0.04;
  double background_freq_max = 0.10;
  double edge_width = 0.8;  // pixels, soft-edge transition
  double noise = 0.02;
  double train_fraction = 0.8;
  RngSeed seed{0};

  void validate() const;
  nlohmann::json to_json() const;
};

/// Deterministic per seed. The first round(train_fraction * n) samples (by
/// index) form the training split.
Dataset generate_synthetic(const SynthSpec& spec);

// ---- resizing ----

/// Half-pixel-centered bilinear interpolation.
ImagePlane resize_bilinear(const ImagePlane& image, int height, int width);
BinaryMap resize_nearest(const BinaryMap& mask, int height, int width);

// ---- on-disk datasets ----
//
// root/manifest.json
// root/{train,test}/images/<id>.png, root/{train,test}/masks/<id>.png
// root/train/deltas/<id>.f32   raw little-endian float32, (y, x, c) order

struct LoadOptions {
  int image_size = 64;  // square resize target; 0 keeps the stored size
};

/// Uses the manifest's pair list when present, otherwise pairs every image in
/// <split>/images with the same-named file in <split>/masks.
Dataset load_dataset(const std::filesystem::path& root, const LoadOptions& opt = {});
std::vector<Sample> load_split(const std::filesystem::path& root,
                               const std::string& split,
                               const LoadOptions& opt = {});
nlohmann::json read_manifest(const std::filesystem::path& root);

/// Writes both splits and a manifest; returns the manifest.
nlohmann::json save_dataset(const Dataset& data, const std::filesystem::path& root,
                            int bit_depth = 16,
                            const nlohmann::json& extra = nlohmann::json::object());

struct SaveOptions {
  int bit_depth = 16;
  bool write_deltas = false;
  // Permits 8-bit output even when it would erase the smallest texture
  // perturbations.
  bool allow_lossy_8bit = false;
};

/// True when the smallest nonzero texture bound falls below one 8-bit step.
bool eight_bit_erases_texture(const ProtectorState& state);

/// Writes the protected training split, the clean test split and a manifest
/// describing the protector. `warnings` collects precision notes.
nlohmann::json save_protected(std::span<const ProtectedSample> train,
                              std::span<const Sample> test,
                              const std::filesystem::path& root,
                              const ProtectorState& state, const SaveOptions& opt,
                              const nlohmann::json& extra = nlohmann::json::object(),
                              std::vector<std::string>* warnings = nullptr);

void write_delta_sidecar(const std::filesystem::path& path, const RealField& delta);
RealField read_delta_sidecar(const std::filesystem::path& path, int height,
                             int width, int channels);

/// Protector fields recorded in manifests (kind, epsilon, band, LBP, floor).
nlohmann::json protector_json(const ProtectorState& state);

}  // namespace umed

#endif  // UMED_DATAIO_H_
