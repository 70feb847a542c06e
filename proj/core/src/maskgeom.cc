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

#include "umed/maskgeom.h"

#include <algorithm>

#include <fmt/format.h>

namespace umed {
namespace {

// Separable running min/max over a (2r+1) window along rows then columns.
// Replicate padding means clamping the window to the image.
BinaryMap morph(const BinaryMap& mask, int radius, bool take_max) {
  const int h = mask.height();
  const int w = mask.width();
  Grid<std::uint8_t> rows(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool acc = !take_max;
      for (int dx = -radius; dx <= radius; ++dx) {
        const bool v = mask(y, std::clamp(x + dx, 0, w - 1));
        acc = take_max ? (acc || v) : (acc && v);
      }
      rows(y, x) = acc;
    }
  }
  Grid<std::uint8_t> out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool acc = !take_max;
      for (int dy = -radius; dy <= radius; ++dy) {
        const bool v = rows(std::clamp(y + dy, 0, h - 1), x) != 0;
        acc = take_max ? (acc || v) : (acc && v);
      }
      out(y, x) = acc;
    }
  }
  return BinaryMap::from_grid(std::move(out));
}

}  // namespace

BinaryMap dilate(const BinaryMap& mask, int radius) {
  return morph(mask, radius, true);
}

BinaryMap erode(const BinaryMap& mask, int radius) {
  return morph(mask, radius, false);
}

BinaryMap extract_contour_band(const BinaryMap& mask,
                               const ContourBandSpec& spec) {
  if (spec.band_width < 1) {
    throw ConfigError(
        fmt::format("band_width must be >= 1, got {}", spec.band_width));
  }
  const int min_side = std::min(mask.height(), mask.width());
  if (2 * spec.band_width >= min_side) {
    throw DegenerateBandError(
        fmt::format("band width {} too large for a {}x{} mask",
                    spec.band_width, mask.height(), mask.width()));
  }
  const BinaryMap grown = dilate(mask, spec.band_width);
  const BinaryMap shrunk = erode(mask, spec.band_width);
  BinaryMap band(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      band.set(y, x, grown(y, x) && !shrunk(y, x));
    }
  }
  return band;
}

BinaryMap interior_map(const BinaryMap& mask, const BinaryMap& contour) {
  if (mask.height() != contour.height() || mask.width() != contour.width()) {
    throw DimensionError("contour band does not match mask dimensions");
  }
  BinaryMap interior(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      interior.set(y, x, mask(y, x) && !contour(y, x));
    }
  }
  return interior;
}

}  // namespace umed
