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

#ifndef UMED_CORE_H_
#define UMED_CORE_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace umed {

// Error categories surfaced by the toolkit. Callers that need to map errors to
// exit codes (the CLI) switch on the dynamic type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DimensionError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};
class IngestionError : public Error {
 public:
  using Error::Error;
};
class NumericalError : public Error {
 public:
  using Error::Error;
};
class MissingPerturbationError : public Error {
 public:
  using Error::Error;
};
class DegenerateBandError : public Error {
 public:
  using Error::Error;
};

/// Dense H x W x C array with planar (channel-major) storage.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 0) {
      throw DimensionError("negative grid dimension");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  const T& operator()(int y, int x, int c = 0) const {
    return data_[index(y, x, c)];
  }

  std::span<T> plane(int c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const T> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  template <typename U>
  bool same_spatial(const Grid<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return same_spatial(other) && channels_ == other.channels();
  }

  friend bool operator==(const Grid& a, const Grid& b) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using RealField = Grid<float>;

/// Image with 1 or 3 channels and every value in [0, 1].
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int height, int width, int channels, float fill = 0.0f);

  /// Adopts `field`; throws DimensionError for an unsupported channel count and
  /// std::domain_error when a value lies outside [0, 1] or is not finite.
  static ImagePlane from_field(RealField field);

  int height() const { return field_.height(); }
  int width() const { return field_.width(); }
  int channels() const { return field_.channels(); }
  float operator()(int y, int x, int c = 0) const { return field_(y, x, c); }
  const RealField& field() const { return field_; }

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  explicit ImagePlane(RealField field) : field_(std::move(field)) {}
  RealField field_;
};

/// Single-channel {0, 1} map: ROI mask, contour band or interior map.
class BinaryMap {
 public:
  BinaryMap() = default;
  BinaryMap(int height, int width, bool fill = false)
      : grid_(height, width, 1, fill ? 1 : 0) {}

  static BinaryMap from_grid(Grid<std::uint8_t> grid);
  /// Sets pixels where `field(p, 0) > threshold`.
  static BinaryMap threshold(const RealField& field, float threshold);

  int height() const { return grid_.height(); }
  int width() const { return grid_.width(); }
  bool operator()(int y, int x) const { return grid_(y, x) != 0; }
  void set(int y, int x, bool v) { grid_(y, x) = v ? 1 : 0; }
  std::size_t count() const;
  const Grid<std::uint8_t>& grid() const { return grid_; }

  friend bool operator==(const BinaryMap&, const BinaryMap&) = default;

 private:
  Grid<std::uint8_t> grid_;
};

/// Signed perturbation with a per-pixel magnitude bound shared by all channels.
struct Perturbation {
  RealField delta;   // H x W x C
  RealField budget;  // H x W x 1, nonnegative

  /// max over (p, c) of |delta(p, c)| - budget(p); <= 0 when the bound holds.
  float max_excess() const;
  bool within_budget() const { return max_excess() <= 0.0f; }
};

/// L-infinity budget kept as an exact rational so it can be echoed verbatim.
struct Epsilon {
  std::int64_t numerator = 4;
  std::int64_t denominator = 255;

  double value() const {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  /// "4/255" style rendering.
  std::string str() const;
  /// Accepts "a/b" or a decimal literal; throws ConfigError otherwise or when
  /// the value is outside (0, 1).
  static Epsilon parse(std::string_view text);

  friend bool operator==(const Epsilon&, const Epsilon&) = default;
};

/// One image/mask pair of a segmentation dataset.
struct Sample {
  std::string id;
  ImagePlane image;
  BinaryMap mask;
};

struct RngSeed {
  std::uint64_t value = 0;
  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// Derives an independent seed for a named stream, so components never share
/// generator state.
RngSeed derive_seed(RngSeed parent, std::string_view stream);
RngSeed derive_seed(RngSeed parent, std::uint64_t index);

/// Deterministic generator. The mt19937-64 engine sequence is fixed by the
/// standard; distributions are implemented here so sequences do not depend on
/// the standard library vendor.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed.value) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Elementwise min(hi, max(lo, v)).
RealField clip_interval(const RealField& values, float lo, float hi);
/// Field bounds either match `values` exactly or are single-channel and
/// broadcast across channels.
RealField clip_interval(const RealField& values, const RealField& lo,
                        const RealField& hi);

/// out(p, c) = field(p, c) * mask(p).
RealField masked_mul(const RealField& field, const BinaryMap& mask);

/// ITU-R BT.601 luma for 3-channel images, identity for 1-channel.
RealField to_luminance(const ImagePlane& image);

}  // namespace umed

#endif  // UMED_CORE_H_
