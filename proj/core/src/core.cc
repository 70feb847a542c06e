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

#include "umed/core.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace umed {

ImagePlane::ImagePlane(int height, int width, int channels, float fill)
    : ImagePlane(from_field(RealField(height, width, channels, fill))) {}

ImagePlane ImagePlane::from_field(RealField field) {
  if (field.channels() != 1 && field.channels() != 3) {
    throw DimensionError(
        fmt::format("image must have 1 or 3 channels, got {}", field.channels()));
  }
  for (float v : field.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw std::domain_error(fmt::format("image value {} outside [0, 1]", v));
    }
  }
  return ImagePlane(std::move(field));
}

BinaryMap BinaryMap::from_grid(Grid<std::uint8_t> grid) {
  if (grid.channels() != 1) {
    throw DimensionError("binary map must be single-channel");
  }
  for (auto v : grid.values()) {
    if (v > 1) throw std::domain_error("binary map value outside {0, 1}");
  }
  BinaryMap map;
  map.grid_ = std::move(grid);
  return map;
}

BinaryMap BinaryMap::threshold(const RealField& field, float threshold) {
  BinaryMap map(field.height(), field.width());
  auto src = field.plane(0);
  auto& dst = map.grid_.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > threshold;
  return map;
}

std::size_t BinaryMap::count() const {
  return std::accumulate(grid_.data().begin(), grid_.data().end(),
                         std::size_t{0});
}

float Perturbation::max_excess() const {
  if (delta.height() != budget.height() || delta.width() != budget.width() ||
      budget.channels() != 1) {
    throw DimensionError("perturbation budget must be H x W x 1");
  }
  float worst = -std::numeric_limits<float>::infinity();
  auto b = budget.plane(0);
  for (int c = 0; c < delta.channels(); ++c) {
    auto d = delta.plane(c);
    for (std::size_t i = 0; i < d.size(); ++i) {
      worst = std::max(worst, std::fabs(d[i]) - b[i]);
    }
  }
  return worst;
}

std::string Epsilon::str() const {
  return fmt::format("{}/{}", numerator, denominator);
}

namespace {

std::int64_t parse_int(std::string_view text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("invalid integer '{}'", text));
  }
  return v;
}

}  // namespace

Epsilon Epsilon::parse(std::string_view text) {
  Epsilon eps;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    eps.numerator = parse_int(text.substr(0, slash));
    eps.denominator = parse_int(text.substr(slash + 1));
  } else {
    // Decimal literal: keep it exact in base 10.
    auto dot = text.find('.');
    std::string digits(text);
    std::int64_t den = 1;
    if (dot != std::string_view::npos) {
      std::size_t frac = text.size() - dot - 1;
      if (frac > 12) throw ConfigError(fmt::format("epsilon '{}' too precise", text));
      digits.erase(dot, 1);
      for (std::size_t i = 0; i < frac; ++i) den *= 10;
    }
    eps.numerator = parse_int(digits);
    eps.denominator = den;
    auto g = std::gcd(eps.numerator, eps.denominator);
    if (g > 1) {
      eps.numerator /= g;
      eps.denominator /= g;
    }
  }
  if (eps.denominator <= 0 || eps.numerator <= 0 ||
      eps.numerator >= eps.denominator) {
    throw ConfigError(fmt::format("epsilon '{}' must lie in (0, 1)", text));
  }
  return eps;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngSeed derive_seed(RngSeed parent, std::string_view stream) {
  // FNV-1a over the stream name, then mixed with the parent.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : stream) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return {splitmix64(parent.value ^ splitmix64(h))};
}

RngSeed derive_seed(RngSeed parent, std::uint64_t index) {
  return {splitmix64(parent.value + 0x632be59bd9b4e019ULL * (index + 1))};
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

RealField clip_interval(const RealField& values, float lo, float hi) {
  if (lo > hi) throw std::invalid_argument("clip_interval: lo > hi");
  RealField out = values;
  for (float& v : out.values()) v = std::min(hi, std::max(lo, v));
  return out;
}

namespace {

void check_bound_shape(const RealField& values, const RealField& bound) {
  if (!values.same_spatial(bound) ||
      (bound.channels() != 1 && bound.channels() != values.channels())) {
    throw DimensionError(fmt::format(
        "clip bound {}x{}x{} incompatible with field {}x{}x{}", bound.height(),
        bound.width(), bound.channels(), values.height(), values.width(),
        values.channels()));
  }
}

}  // namespace

RealField clip_interval(const RealField& values, const RealField& lo,
                        const RealField& hi) {
  check_bound_shape(values, lo);
  check_bound_shape(values, hi);
  RealField out = values;
  for (int c = 0; c < values.channels(); ++c) {
    auto dst = out.plane(c);
    auto l = lo.plane(lo.channels() == 1 ? 0 : c);
    auto h = hi.plane(hi.channels() == 1 ? 0 : c);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (l[i] > h[i]) throw std::invalid_argument("clip_interval: lo > hi");
      dst[i] = std::min(h[i], std::max(l[i], dst[i]));
    }
  }
  return out;
}

RealField masked_mul(const RealField& field, const BinaryMap& mask) {
  if (field.height() != mask.height() || field.width() != mask.width()) {
    throw DimensionError(fmt::format("mask {}x{} does not match field {}x{}",
                                     mask.height(), mask.width(),
                                     field.height(), field.width()));
  }
  RealField out = field;
  const auto& m = mask.grid().data();
  for (int c = 0; c < out.channels(); ++c) {
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (!m[i]) dst[i] = 0.0f;
    }
  }
  return out;
}

RealField to_luminance(const ImagePlane& image) {
  const RealField& f = image.field();
  if (f.channels() == 1) return f;
  RealField out(f.height(), f.width(), 1);
  auto r = f.plane(0), g = f.plane(1), b = f.plane(2);
  auto dst = out.plane(0);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
  }
  return out;
}

}  // namespace umed
