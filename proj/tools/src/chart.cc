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

#include "chart.h"

#include <algorithm>
#include <array>
#include <map>
#include <string>

#include "umed/image_io.h"

namespace umed::cli {

namespace {

using Rgb = std::array<std::uint16_t, 3>;

constexpr int kBar = 24;
constexpr int kGap = 8;
constexpr int kMargin = 16;
constexpr int kPlotHeight = 200;

const Rgb kPalette[] = {{78, 121, 167}, {242, 142, 43}, {89, 161, 79},  {176, 122, 161},
                        {237, 201, 72}, {118, 183, 178}, {156, 117, 95}, {186, 176, 172}};

void fill(RawImage& img, int x0, int y0, int x1, int y1, const Rgb& c) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width);
  y1 = std::min(y1, img.height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int k = 0; k < 3; ++k) {
        img.samples[(static_cast<std::size_t>(y) * img.width + x) * 3 + k] = c[k];
      }
    }
  }
}

}  // namespace

void write_dsc_chart(const std::filesystem::path& path,
                     std::span<const MatrixCell> cells) {
  const int n = static_cast<int>(cells.size());
  RawImage img;
  img.width = 2 * kMargin + std::max(n, 1) * (kBar + kGap);
  img.height = 2 * kMargin + kPlotHeight;
  img.channels = 3;
  img.bit_depth = 8;
  img.samples.assign(static_cast<std::size_t>(img.width) * img.height * 3, 255);

  const int base = kMargin + kPlotHeight;
  // Gridlines at DSC 0.25, 0.5, 0.75 and 1.
  for (int q = 1; q <= 4; ++q) {
    const int y = base - q * kPlotHeight / 4;
    fill(img, kMargin, y, img.width - kMargin, y + 1, {220, 220, 220});
  }
  std::map<std::string, std::size_t> colors;
  for (int i = 0; i < n; ++i) {
    const MatrixCell& c = cells[i];
    const int x0 = kMargin + kGap / 2 + i * (kBar + kGap);
    if (!c.ok) {
      fill(img, x0, base - 4, x0 + kBar, base, {200, 40, 40});
      continue;
    }
    const std::size_t idx = colors.emplace(c.protector, colors.size()).first->second;
    const double v = std::clamp(c.segmentation.mean_dsc, 0.0, 1.0);
    const int h = static_cast<int>(std::lround(v * kPlotHeight));
    fill(img, x0, base - h, x0 + kBar, base, kPalette[idx % std::size(kPalette)]);
  }
  fill(img, kMargin, base, img.width - kMargin, base + 1, {0, 0, 0});
  write_png(path, img);
}

}  // namespace umed::cli
