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

#include "umed/texture.h"

#include <algorithm>
#include <array>

#include <fmt/format.h>

namespace umed {
namespace {

// (dy, dx), clockwise from east with y pointing down.
constexpr std::array<std::array<int, 2>, 8> kRing = {{
    {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}}};

void check_config(const LbpConfig& cfg) {
  if (cfg.neighbors != 8 || cfg.radius != 1) {
    throw ConfigError(fmt::format(
        "only the 8-neighbour radius-1 LBP is supported (got P={}, R={})",
        cfg.neighbors, cfg.radius));
  }
}

}  // namespace

int circular_transitions(std::uint32_t code, int bits) {
  int count = 0;
  for (int k = 0; k < bits; ++k) {
    const bool a = (code >> k) & 1u;
    const bool b = (code >> ((k + 1) % bits)) & 1u;
    count += a != b;
  }
  return count;
}

Grid<std::uint16_t> lbp_codes(const RealField& gray, const LbpConfig& cfg) {
  check_config(cfg);
  if (gray.channels() != 1) {
    throw DimensionError("lbp_codes expects a single-channel image");
  }
  const int h = gray.height();
  const int w = gray.width();
  Grid<std::uint16_t> codes(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float centre = gray(y, x);
      std::uint16_t code = 0;
      for (int k = 0; k < 8; ++k) {
        const int ny = std::clamp(y + kRing[k][0], 0, h - 1);
        const int nx = std::clamp(x + kRing[k][1], 0, w - 1);
        if (gray(ny, nx) >= centre) code |= static_cast<std::uint16_t>(1u << k);
      }
      codes(y, x) = code;
    }
  }
  return codes;
}

TextureMap texture_intensity_map(const ImagePlane& image,
                                 const BinaryMap& interior,
                                 const LbpConfig& cfg, float floor) {
  check_config(cfg);
  if (!(floor >= 0.0f && floor < 1.0f)) {
    throw ConfigError(fmt::format("texture floor {} outside [0, 1)", floor));
  }
  if (image.height() != interior.height() || image.width() != interior.width()) {
    throw DimensionError("interior map does not match image dimensions");
  }
  const int h = image.height();
  const int w = image.width();
  TextureMap result{RealField(h, w, 1), false};
  if (interior.count() == 0) {
    result.empty_interior = true;
    return result;
  }

  const auto codes = lbp_codes(to_luminance(image), cfg);
  RealField raw(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      raw(y, x) = static_cast<float>(circular_transitions(codes(y, x), 8)) / 8.0f;
    }
  }

  RealField smooth(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          acc += raw(std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
        }
      }
      smooth(y, x) = acc / 9.0f;
    }
  }

  float lo = 1.0f, hi = 0.0f;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!interior(y, x)) continue;
      lo = std::min(lo, smooth(y, x));
      hi = std::max(hi, smooth(y, x));
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!interior(y, x)) continue;
      float v = floor;
      if (hi > lo) v = floor + (1.0f - floor) * (smooth(y, x) - lo) / (hi - lo);
      result.values(y, x) = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return result;
}

}  // namespace umed
