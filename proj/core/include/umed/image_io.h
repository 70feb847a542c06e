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

#ifndef UMED_IMAGE_IO_H_
#define UMED_IMAGE_IO_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "umed/core.h"

namespace umed {

/// Integer samples, interleaved row-major (y, x, c).
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;

  int max_value() const { return (1 << bit_depth) - 1; }
};

/// Reads gray, gray+alpha, RGB or RGBA PNGs (alpha dropped, palettes expanded).
RawImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RawImage& image);

std::vector<std::uint8_t> jpeg_encode(const RawImage& image, int quality);
RawImage jpeg_decode(const std::vector<std::uint8_t>& bytes);

/// Scales samples by 1 / max_value.
ImagePlane to_image_plane(const RawImage& raw);
/// Rounds v * max_value to the nearest integer.
RawImage quantize(const ImagePlane& image, int bit_depth);

/// A pixel is foreground when its 8-bit equivalent value exceeds 127 (first
/// channel only).
BinaryMap to_mask(const RawImage& raw);
/// 8-bit 0/255 single-channel image.
RawImage mask_to_raw(const BinaryMap& mask);

}  // namespace umed

#endif  // UMED_IMAGE_IO_H_
