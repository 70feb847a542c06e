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

#ifndef UMED_TEXTURE_H_
#define UMED_TEXTURE_H_

#include <cstdint>

#include "umed/core.h"

namespace umed {

/// 8-neighbour, radius-1 LBP. Bit k is set when neighbour k >= centre;
/// neighbours run clockwise starting at the east pixel.
struct LbpConfig {
  int neighbors = 8;
  int radius = 1;
};

struct TextureMap {
  RealField values;  // H x W x 1, in [0, 1], zero outside the interior
  bool empty_interior = false;
};

/// Throws ConfigError unless cfg is the supported (8, 1) ring and
/// DimensionError for multi-channel input.
Grid<std::uint16_t> lbp_codes(const RealField& gray, const LbpConfig& cfg = {});

/// Number of 0/1 transitions in the circular `bits`-bit sequence of `code`.
int circular_transitions(std::uint32_t code, int bits);

/// Per-pixel texture intensity: normalized LBP transition count, 3x3 mean
/// smoothing, then affine rescale inside `interior` to [floor, 1]. Multi-channel
/// images are reduced to luminance first.
TextureMap texture_intensity_map(const ImagePlane& image,
                                 const BinaryMap& interior,
                                 const LbpConfig& cfg = {}, float floor = 0.1f);

}  // namespace umed

#endif  // UMED_TEXTURE_H_
