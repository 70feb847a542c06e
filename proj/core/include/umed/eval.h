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

#ifndef UMED_EVAL_H_
#define UMED_EVAL_H_

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "umed/core.h"
#include "umed/nets.h"

namespace umed {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};
Confusion confusion(const BinaryMap& pred, const BinaryMap& gt);

/// 2|P n G| / (|P| + |G|); 1 when both are empty.
double dsc(const BinaryMap& pred, const BinaryMap& gt);
double dsc(const Confusion& c);
/// |P n G| / |P u G|; 1 when both are empty.
double jaccard(const BinaryMap& pred, const BinaryMap& gt);
double jaccard(const Confusion& c);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// -10 log10(MSE) for unit dynamic range; +inf when the images are equal.
double psnr(const ImagePlane& a, const ImagePlane& b);
/// PSNR over the pixels where `region` is set (all channels).
double psnr(const ImagePlane& a, const ImagePlane& b, const BinaryMap& region);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};
/// Mean SSIM over all valid window positions, averaged over channels.
double ssim(const ImagePlane& a, const ImagePlane& b, const SsimOptions& opt = {});

/// PSNR as JSON: {"psnr": value} or {"psnr": null, "psnr_infinite": true}.
nlohmann::json psnr_json(double value);

// ---- defenses ----

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_kernel(int size, double sigma);
/// Separable Gaussian blur, replicate borders, output clipped to [0, 1].
ImagePlane gaussian_blur(const ImagePlane& x, int kernel = 3, double sigma = 0.8);
/// 8-bit quantization plus a baseline JPEG round trip.
ImagePlane jpeg_roundtrip(const ImagePlane& x, int quality = 60);

// ---- model evaluation ----

/// Thresholds sigmoid(logits) at 0.5, i.e. logits > 0.
std::vector<BinaryMap> predict_masks(const ModelParams<float>& params,
                                     const NetSpec& spec,
                                     std::span<const Sample> samples,
                                     int batch_size = 16);

struct SegmentationScores {
  std::vector<double> dsc;
  std::vector<double> jaccard;
  double mean_dsc = 0.0;
  double mean_jaccard = 0.0;
  nlohmann::json to_json(bool per_sample = true) const;
};
SegmentationScores score_segmentation(std::span<const BinaryMap> pred,
                                      std::span<const Sample> truth);
SegmentationScores evaluate_segmentation(const ModelParams<float>& params,
                                         const NetSpec& spec,
                                         std::span<const Sample> test);

struct InvisibilityScores {
  std::vector<double> psnr;
  std::vector<double> ssim;
  double mean_psnr = 0.0;  // over finite values; +inf if all are infinite
  std::size_t infinite_psnr = 0;
  double mean_ssim = 0.0;
  nlohmann::json to_json(bool per_sample = true) const;
};
/// Pairs are matched by position.
InvisibilityScores evaluate_invisibility(std::span<const ImagePlane> clean,
                                         std::span<const ImagePlane> protected_);

}  // namespace umed

#endif  // UMED_EVAL_H_
