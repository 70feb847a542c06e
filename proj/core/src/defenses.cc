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

#include <algorithm>

#include "umed/eval.h"
#include "umed/image_io.h"

namespace umed {

ImagePlane gaussian_blur(const ImagePlane& x, int kernel, double sigma) {
  const std::vector<double> k = gaussian_kernel(kernel, sigma);
  const int r = kernel / 2;
  const int h = x.height(), w = x.width();
  RealField out(h, w, x.channels());
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int i = 0; i < w; ++i) {
        double s = 0.0;
        for (int t = -r; t <= r; ++t) s += k[t + r] * x(y, std::clamp(i + t, 0, w - 1), c);
        tmp[static_cast<std::size_t>(y) * w + i] = s;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int i = 0; i < w; ++i) {
        double s = 0.0;
        for (int t = -r; t <= r; ++t) {
          s += k[t + r] * tmp[static_cast<std::size_t>(std::clamp(y + t, 0, h - 1)) * w + i];
        }
        out(y, i, c) = static_cast<float>(std::clamp(s, 0.0, 1.0));
      }
    }
  }
  return ImagePlane::from_field(std::move(out));
}

ImagePlane jpeg_roundtrip(const ImagePlane& x, int quality) {
  if (quality < 1 || quality > 100) {
    throw ConfigError("JPEG quality must be in [1, 100]");
  }
  return to_image_plane(jpeg_decode(jpeg_encode(quantize(x, 8), quality)));
}

}  // namespace umed
