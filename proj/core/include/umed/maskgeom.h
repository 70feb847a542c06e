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

#ifndef UMED_MASKGEOM_H_
#define UMED_MASKGEOM_H_

#include "umed/core.h"

namespace umed {

/// Contour band = dilate(mask) - erode(mask) with a (2w+1) x (2w+1) square.
struct ContourBandSpec {
  int band_width = 1;
};

/// Morphological gradient of `mask` with replicate border padding. Throws
/// ConfigError for band_width < 1 and DegenerateBandError when
/// band_width >= min(H, W) / 2.
BinaryMap extract_contour_band(const BinaryMap& mask,
                               const ContourBandSpec& spec = {});

/// y_t = (1 - y_c) * y.
BinaryMap interior_map(const BinaryMap& mask, const BinaryMap& contour);

/// Square-element dilation / erosion with replicate padding.
BinaryMap dilate(const BinaryMap& mask, int radius);
BinaryMap erode(const BinaryMap& mask, int radius);

}  // namespace umed

#endif  // UMED_MASKGEOM_H_
