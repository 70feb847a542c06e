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

#include <gtest/gtest.h>

#include <cmath>

#include "umed/core.h"
#include "umed/texture.h"

namespace umed {
namespace {

ImagePlane gray(int h, int w, std::initializer_list<float> v) {
  RealField f(h, w, 1);
  std::copy(v.begin(), v.end(), f.data().begin());
  return ImagePlane::from_field(f);
}

ImagePlane random_image(Rng& rng, int h, int w) {
  RealField f(h, w, 1);
  for (float& v : f.values()) v = static_cast<float>(rng.uniform());
  return ImagePlane::from_field(f);
}

TEST(Lbp, ConstantImageAllOnes) {
  auto codes = lbp_codes(RealField(5, 5, 1, 0.3f));
  for (auto c : codes.values()) EXPECT_EQ(c, 255);
}

TEST(Lbp, IsolatedPeakIsZero) {
  ImagePlane im = gray(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  EXPECT_EQ(lbp_codes(im.field())(1, 1), 0);
}

TEST(Lbp, NeighborOrderStartsEastClockwise) {
  // Only the east neighbor reaches the center value: bit 0.
  ImagePlane im = gray(3, 3, {0, 0, 0, 0, 0.5f, 0.5f, 0, 0, 0});
  EXPECT_EQ(lbp_codes(im.field())(1, 1), 1);
  // South-east is bit 1, south is bit 2, north-east is bit 7.
  im = gray(3, 3, {0, 0, 0.5f, 0, 0.5f, 0, 0, 0.5f, 0.5f});
  EXPECT_EQ(lbp_codes(im.field())(1, 1), (1 << 1) | (1 << 2) | (1 << 7));
}

TEST(Lbp, AffineInvariant) {
  Rng rng(RngSeed{31});
  ImagePlane im = random_image(rng, 10, 10);
  RealField t = im.field();
  for (float& v : t.values()) v = 0.5f * v + 0.2f;
  EXPECT_EQ(lbp_codes(im.field()), lbp_codes(t));
}

TEST(Lbp, UnsupportedConfigThrows) {
  EXPECT_THROW(lbp_codes(RealField(4, 4, 1), {16, 2}), ConfigError);
}

TEST(Transitions, Counts) {
  EXPECT_EQ(circular_transitions(0x00, 8), 0);
  EXPECT_EQ(circular_transitions(0xff, 8), 0);
  EXPECT_EQ(circular_transitions(0x55, 8), 8);
  EXPECT_EQ(circular_transitions(0x0f, 8), 2);
  EXPECT_EQ(circular_transitions(0x01, 8), 2);
}

TEST(TextureMap, ConstantImageAtFloor) {
  BinaryMap interior(6, 6);
  for (int y = 1; y < 5; ++y)
    for (int x = 1; x < 5; ++x) interior.set(y, x, true);
  TextureMap t = texture_intensity_map(ImagePlane(6, 6, 1, 0.4f), interior);
  EXPECT_FALSE(t.empty_interior);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x)
      EXPECT_FLOAT_EQ(t.values(y, x), interior(y, x) ? 0.1f : 0.0f);
}

TEST(TextureMap, CheckerboardAlternatesUnderTieRule) {
  RealField f(12, 12, 1);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) f(y, x) = ((x + y) % 2) ? 1.0f : 0.0f;
  // Bright centers: 4-neighbors are darker (0), diagonals tie (1) -> U = 8.
  // Dark centers: every neighbor is >= the center -> code 255, U = 0.
  auto codes = lbp_codes(f);
  for (int y = 1; y < 11; ++y) {
    for (int x = 1; x < 11; ++x) {
      EXPECT_EQ(circular_transitions(codes(y, x), 8), (x + y) % 2 ? 8 : 0);
    }
  }
  // Away from the border the 3x3 mean is 5/9 on bright and 4/9 on dark
  // pixels, which rescale to 1 and to the floor.
  BinaryMap interior(12, 12);
  for (int y = 2; y < 10; ++y)
    for (int x = 2; x < 10; ++x) interior.set(y, x, true);
  TextureMap t = texture_intensity_map(ImagePlane::from_field(f), interior);
  for (int y = 2; y < 10; ++y)
    for (int x = 2; x < 10; ++x)
      EXPECT_FLOAT_EQ(t.values(y, x), (x + y) % 2 ? 1.0f : 0.1f);
}

TEST(TextureMap, EmptyInteriorIsZeroWithWarning) {
  Rng rng(RngSeed{2});
  TextureMap t = texture_intensity_map(random_image(rng, 6, 6), BinaryMap(6, 6));
  EXPECT_TRUE(t.empty_interior);
  for (float v : t.values.values()) EXPECT_EQ(v, 0.0f);
}

TEST(TextureMap, RangeAndMasking) {
  Rng rng(RngSeed{9});
  for (int trial = 0; trial < 10; ++trial) {
    ImagePlane im = random_image(rng, 12, 12);
    BinaryMap interior(12, 12);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x) interior.set(y, x, rng.uniform() < 0.6);
    TextureMap t = texture_intensity_map(im, interior, {}, 0.1f);
    float lo = 1, hi = 0;
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 12; ++x) {
        const float v = t.values(y, x);
        if (!interior(y, x)) {
          EXPECT_EQ(v, 0.0f);
          continue;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    EXPECT_FLOAT_EQ(hi, 1.0f);
    EXPECT_FLOAT_EQ(lo, 0.1f);
  }
}

TEST(TextureMap, FloorOutOfRangeThrows) {
  EXPECT_THROW(texture_intensity_map(ImagePlane(4, 4, 1), BinaryMap(4, 4, true), {}, 1.0f),
               ConfigError);
}

TEST(TextureMap, ColorUsesLuminance) {
  Rng rng(RngSeed{4});
  RealField c(10, 10, 3);
  for (float& v : c.values()) v = static_cast<float>(rng.uniform());
  ImagePlane color = ImagePlane::from_field(c);
  ImagePlane lum = ImagePlane::from_field(to_luminance(color));
  BinaryMap interior(10, 10, true);
  EXPECT_EQ(texture_intensity_map(color, interior).values,
            texture_intensity_map(lum, interior).values);
}

TEST(TextureMap, Deterministic) {
  Rng rng(RngSeed{8});
  ImagePlane im = random_image(rng, 9, 9);
  BinaryMap interior(9, 9, true);
  EXPECT_EQ(texture_intensity_map(im, interior).values,
            texture_intensity_map(im, interior).values);
}

}  // namespace
}  // namespace umed
