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

#include "umed/eval.h"

namespace umed {
namespace {

ImagePlane random_image(int h, int w, int c, std::uint64_t seed) {
  Rng rng(RngSeed{seed});
  RealField f(h, w, c);
  for (float& v : f.values()) v = static_cast<float>(rng.uniform());
  return ImagePlane::from_field(f);
}

ImagePlane smooth_image(int h, int w, std::uint64_t seed) {
  Rng rng(RngSeed{seed});
  const double fy = rng.uniform(0.05, 0.2), fx = rng.uniform(0.05, 0.2);
  RealField f(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      f(y, x) = static_cast<float>(0.5 + 0.3 * std::sin(fy * y * 6.28) * std::cos(fx * x * 6.28) +
                                   rng.uniform(-0.05, 0.05));
  return ImagePlane::from_field(f);
}

BinaryMap row_map(std::initializer_list<int> bits) {
  BinaryMap m(1, static_cast<int>(bits.size()));
  int x = 0;
  for (int b : bits) m.set(0, x++, b != 0);
  return m;
}

TEST(Overlap, KnownCounts) {
  // TP 2, FP 1, FN 2.
  const BinaryMap pred = row_map({1, 1, 1, 0, 0, 0});
  const BinaryMap gt = row_map({1, 1, 0, 1, 1, 0});
  EXPECT_NEAR(dsc(pred, gt), 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(jaccard(pred, gt), 0.4, 1e-12);
  const Confusion c = confusion(pred, gt);
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 2u);
}

TEST(Overlap, IdentityEmptyAndDisjoint) {
  const BinaryMap a = row_map({0, 1, 1, 0});
  EXPECT_EQ(dsc(a, a), 1.0);
  EXPECT_EQ(jaccard(a, a), 1.0);
  const BinaryMap empty(1, 4);
  EXPECT_EQ(dsc(empty, empty), 1.0);
  EXPECT_EQ(jaccard(empty, empty), 1.0);
  EXPECT_EQ(dsc(a, row_map({1, 0, 0, 1})), 0.0);
  EXPECT_EQ(dsc(empty, a), 0.0);
  EXPECT_THROW(dsc(a, BinaryMap(1, 5)), DimensionError);
}

TEST(Overlap, DiceJaccardRelation) {
  Rng rng(RngSeed{1});
  for (int t = 0; t < 50; ++t) {
    BinaryMap a(8, 8), b(8, 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        a.set(y, x, rng.uniform() < 0.4);
        b.set(y, x, rng.uniform() < 0.4);
      }
    const double d = dsc(a, b), j = jaccard(a, b);
    EXPECT_NEAR(d, 2 * j / (1 + j), 1e-12);
    EXPECT_NEAR(d, dsc(b, a), 1e-15);
  }
}

TEST(Psnr, KnownValueAndSentinel) {
  const ImagePlane a(4, 4, 1, 0.0f), b(4, 4, 1, 0.1f);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
  EXPECT_EQ(psnr(a, a), kInfinitePsnr);
  const auto inf = psnr_json(kInfinitePsnr);
  EXPECT_TRUE(inf["psnr"].is_null());
  EXPECT_EQ(inf["psnr_infinite"], true);
  const auto fin = psnr_json(20.0);
  EXPECT_EQ(fin["psnr"], 20.0);
  EXPECT_EQ(fin["psnr_infinite"], false);
}

TEST(Psnr, RegionRestricted) {
  RealField f(4, 4, 1, 0.0f);
  f(0, 0) = 0.5f;
  const ImagePlane a(4, 4, 1, 0.0f), b = ImagePlane::from_field(f);
  BinaryMap region(4, 4);
  region.set(3, 3, true);
  EXPECT_EQ(psnr(a, b, region), kInfinitePsnr);
  region.set(0, 0, true);
  // MSE over two pixels = 0.125.
  EXPECT_NEAR(psnr(a, b, region), 10 * std::log10(1 / 0.125), 1e-5);
}

// Direct SSIM over every valid 11x11 Gaussian window.
double ssim_oracle(const ImagePlane& a, const ImagePlane& b) {
  double w[11][11], total = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) total += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  const double c1 = 1e-4, c2 = 9e-4;
  double sum = 0;
  int count = 0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 0; y + 11 <= a.height(); ++y)
      for (int x = 0; x + 11 <= a.width(); ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double k = w[i][j] / total, va = a(y + i, x + j, c), vb = b(y + i, x + j, c);
            ma += k * va;
            mb += k * vb;
            saa += k * va * va;
            sbb += k * vb * vb;
            sab += k * va * vb;
          }
        saa -= ma * ma;
        sbb -= mb * mb;
        sab -= ma * mb;
        sum += (2 * ma * mb + c1) * (2 * sab + c2) / ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
        ++count;
      }
  return sum / count;
}

TEST(Ssim, MatchesWindowedOracle) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const ImagePlane a = smooth_image(20, 17, seed), b = smooth_image(20, 17, seed + 10);
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
  }
  const ImagePlane a = random_image(14, 15, 3, 1), b = random_image(14, 15, 3, 2);
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
}

TEST(Ssim, IdentitySymmetryInversion) {
  const ImagePlane a = smooth_image(32, 32, 3), b = smooth_image(32, 32, 4);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  RealField inv = a.field();
  for (float& v : inv.values()) v = 1.0f - v;
  EXPECT_LT(ssim(a, ImagePlane::from_field(inv)), 0.1);
}

TEST(Ssim, RejectsTinyAndMismatched) {
  EXPECT_THROW(ssim(ImagePlane(8, 20, 1), ImagePlane(8, 20, 1)), ConfigError);
  EXPECT_THROW(ssim(ImagePlane(16, 16, 1), ImagePlane(16, 16, 3)), DimensionError);
}

TEST(Blur, KernelMatchesGaussian) {
  const auto k = gaussian_kernel(3, 0.8);
  ASSERT_EQ(k.size(), 3u);
  const double e = std::exp(-1.0 / (2 * 0.64));
  EXPECT_NEAR(k[0], e / (1 + 2 * e), 1e-12);
  EXPECT_NEAR(k[1], 1 / (1 + 2 * e), 1e-12);
  EXPECT_NEAR(k[0] + k[1] + k[2], 1.0, 1e-12);
  EXPECT_THROW(gaussian_kernel(4, 0.8), ConfigError);
  EXPECT_THROW(gaussian_kernel(3, 0.0), ConfigError);
}

TEST(Blur, ConstantPreservedAndImpulseIsOuterProduct) {
  const ImagePlane flat(6, 7, 3, 0.42f);
  const ImagePlane blurred = gaussian_blur(flat);
  for (float v : blurred.field().values()) EXPECT_NEAR(v, 0.42f, 1e-6f);
  RealField f(5, 5, 1, 0.0f);
  f(2, 2) = 1.0f;
  const ImagePlane out = gaussian_blur(ImagePlane::from_field(f));
  const auto k = gaussian_kernel(3, 0.8);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const bool near = std::abs(y - 2) <= 1 && std::abs(x - 2) <= 1;
      const double expect = near ? k[y - 1] * k[x - 1] : 0.0;
      EXPECT_NEAR(out(y, x), expect, 1e-6);
    }
}

TEST(Jpeg, QualityOrderingAndRange) {
  const ImagePlane a = smooth_image(32, 32, 5);
  const ImagePlane lo = jpeg_roundtrip(a, 10), hi = jpeg_roundtrip(a, 95);
  EXPECT_GT(psnr(a, hi), psnr(a, lo));
  EXPECT_GT(psnr(a, hi), 30.0);
  EXPECT_EQ(jpeg_roundtrip(a, 60), jpeg_roundtrip(a, 60));
  for (float v : lo.field().values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
    EXPECT_NEAR(v * 255.0f, std::round(v * 255.0f), 1e-3f);
  }
  const ImagePlane color = jpeg_roundtrip(random_image(16, 16, 3, 1), 60);
  EXPECT_EQ(color.channels(), 3);
  EXPECT_THROW(jpeg_roundtrip(a, 0), ConfigError);
  EXPECT_THROW(jpeg_roundtrip(a, 101), ConfigError);
}

TEST(Invisibility, MeansSkipInfiniteValues) {
  const ImagePlane a(16, 16, 1, 0.0f), b(16, 16, 1, 0.1f);
  std::vector<ImagePlane> clean{a, a}, prot{a, b};
  const InvisibilityScores s = evaluate_invisibility(clean, prot);
  EXPECT_EQ(s.infinite_psnr, 1u);
  EXPECT_NEAR(s.mean_psnr, 20.0, 1e-5);
  const auto j = s.to_json();
  EXPECT_NEAR(j["psnr"].get<double>(), 20.0, 1e-5);
  EXPECT_EQ(j["infinite_psnr_count"], 1);
  EXPECT_TRUE(j["per_sample"]["psnr"][0].is_null());
}

TEST(Segmentation, ScoresAverage) {
  std::vector<Sample> truth{{"a", ImagePlane(1, 6, 1), row_map({1, 1, 0, 1, 1, 0})},
                            {"b", ImagePlane(1, 6, 1), row_map({0, 0, 0, 0, 0, 0})}};
  std::vector<BinaryMap> pred{row_map({1, 1, 1, 0, 0, 0}), row_map({0, 0, 0, 0, 0, 0})};
  const SegmentationScores s = score_segmentation(pred, truth);
  EXPECT_NEAR(s.mean_dsc, (4.0 / 7.0 + 1.0) / 2, 1e-12);
  EXPECT_NEAR(s.mean_jaccard, 0.7, 1e-12);
}

}  // namespace
}  // namespace umed
