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

#ifndef UMED_PERTURB_H_
#define UMED_PERTURB_H_

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "umed/core.h"
#include "umed/maskgeom.h"
#include "umed/nets.h"
#include "umed/texture.h"

namespace umed {

enum class ProtectorKind { kNone, kUmed, kEm };
std::string_view protector_kind_name(ProtectorKind kind);
ProtectorKind parse_protector_kind(std::string_view name);

/// Where EM noise may be placed (full image, contour band only, ROI only).
enum class EmRegion { kFull, kContour, kRoi };
std::string_view em_region_name(EmRegion region);
EmRegion parse_em_region(std::string_view name);

/// Ablation switches for the UMed protector.
struct UmedOptions {
  bool contour_enabled = true;
  bool texture_enabled = true;
  bool lbp_guided = true;  // false: fixed texture bound epsilon * y_t
};

struct ProtectorState {
  ProtectorKind kind = ProtectorKind::kUmed;
  Epsilon epsilon;
  ContourBandSpec band;
  LbpConfig lbp;
  float texture_floor = 0.1f;

  // kUmed
  UmedOptions umed;
  NetSpec contour_spec;
  NetSpec texture_spec;
  ModelParams<float> contour_params;
  ModelParams<float> texture_params;

  // kEm: per-sample perturbation keyed by sample id.
  EmRegion em_region = EmRegion::kFull;
  std::map<std::string, RealField> em_deltas;
};

/// Generator specs for an image with `channels` channels: a CDC-encoder U-Net
/// for the contour branch (or a plain one when `vanilla_contour`) and a plain
/// U-Net for the texture branch. Both start with a zero output layer.
struct GeneratorSpecs {
  NetSpec contour;
  NetSpec texture;
};
GeneratorSpecs default_generator_specs(int channels, int depth, int base_channels,
                                       bool vanilla_contour = false);

ProtectorState make_umed_state(const GeneratorSpecs& specs, Epsilon epsilon,
                               RngSeed seed, ContourBandSpec band = {},
                               LbpConfig lbp = {}, float texture_floor = 0.1f,
                               UmedOptions options = {});
ProtectorState make_em_state(Epsilon epsilon, EmRegion region = EmRegion::kFull,
                             ContourBandSpec band = {});

/// Mask-derived quantities that stay fixed for a sample during training.
struct SampleGeometry {
  BinaryMap contour;   // y_c
  BinaryMap interior;  // y_t
  TextureMap texture;  // x_t
};
SampleGeometry sample_geometry(const ImagePlane& image, const BinaryMap& mask,
                               const ProtectorState& state);

/// epsilon * y_c, H x W x 1 (zero when the contour branch is disabled).
RealField contour_budget(const SampleGeometry& geo, const ProtectorState& state);
/// epsilon * x_t * y_t (or epsilon * y_t without LBP guidance), H x W x 1.
RealField texture_budget(const SampleGeometry& geo, const ProtectorState& state);

/// delta_c = Clip[-eps, eps](eps * tanh(F_c(x)) * y_c).
Perturbation contour_perturbation(const ImagePlane& x, const BinaryMap& y,
                                  const ProtectorState& state);
/// delta_t = Clip[-b, b](eps * tanh(F_t(x))), b = eps * x_t * y_t. An empty
/// interior gives a zero perturbation; `warning` (if given) is set then.
Perturbation texture_perturbation(const ImagePlane& x, const BinaryMap& y,
                                  const ProtectorState& state,
                                  bool* warning = nullptr);

struct ProtectedSample {
  std::string id;
  ImagePlane image;  // x_p
  BinaryMap mask;    // unchanged clean mask
  Perturbation delta_c;
  Perturbation delta_t;
  Perturbation delta_em;  // only for kEm
  ProtectorKind kind = ProtectorKind::kNone;
  bool warning = false;   // e.g. empty interior

  /// x_p - x before quantization, as stored in delta sidecars.
  RealField total_delta() const;
};

/// x_p = Clip[0,1](x + delta_c + delta_t) for kUmed, Clip[0,1](x + delta) for
/// kEm (throws MissingPerturbationError for an unknown id), x for kNone.
ProtectedSample protect_image(const Sample& sample, const ProtectorState& state);
std::vector<ProtectedSample> protect_dataset(std::span<const Sample> samples,
                                             const ProtectorState& state);

// ---- Differentiable pieces shared by training and inference ----

/// Batch tensors for the UMed forward graph.
struct UmedBatch {
  nn::Tensor<float> images;          // N x C x H x W
  nn::Tensor<float> contour_mask;    // N x 1 x H x W, y_c
  nn::Tensor<float> texture_bound;   // N x 1 x H x W, texture budget
};
UmedBatch make_umed_batch(std::span<const Sample* const> samples,
                          std::span<const SampleGeometry* const> geometry,
                          const ProtectorState& state);

struct UmedGraph {
  nn::Var<float> delta_c;    // N x C x H x W
  nn::Var<float> delta_t;
  nn::Var<float> protected_images;
};
UmedGraph umed_forward(const Network<float>& contour_gen,
                       const Network<float>& texture_gen, const UmedBatch& batch,
                       const ProtectorState& state);

/// Surrogate segmenter: logits for a batch of images.
using Segmenter = std::function<nn::Var<float>(const nn::Var<float>&)>;

/// K steps of sign-gradient descent on seg_loss(F_s(clip(x + delta)), y) for
/// each sample, projecting onto |delta| <= eps * region after every step.
/// Deltas start at zero for ids not yet in the table. Returns the loss seen
/// by the last step (0 when steps == 0).
float em_update(std::span<const Sample> batch, const Segmenter& surrogate,
               ProtectorState& state, int steps, float step_size);

/// Region map (H x W x 1 in {0,1}) that limits EM noise for `mask`.
RealField em_region_map(const BinaryMap& mask, const ProtectorState& state);

/// Stacks images into N x C x H x W / masks into N x 1 x H x W.
nn::Tensor<float> stack_images(std::span<const ImagePlane* const> images);
nn::Tensor<float> stack_masks(std::span<const BinaryMap* const> masks);
nn::Tensor<float> stack_fields(std::span<const RealField* const> fields);
RealField unstack_field(const nn::Tensor<float>& batch, int index);

}  // namespace umed

#endif  // UMED_PERTURB_H_
