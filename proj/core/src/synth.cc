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
#include <cmath>
#include <cstdio>
#include <numbers>

#include "umed/dataio.h"

namespace umed {

std::string_view shape_family_name(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::kEllipse: return "ellipse";
    case ShapeFamily::kBlob: return "blob";
    case ShapeFamily::kMixed: return "mixed";
  }
  return "?";
}

ShapeFamily parse_shape_family(std::string_view name) {
  if (name == "ellipse") return ShapeFamily::kEllipse;
  if (name == "blob") return ShapeFamily::kBlob;
  if (name == "mixed") return ShapeFamily::kMixed;
  throw ConfigError("unknown shape family '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (size < 16) throw ConfigError("size must be >= 16");
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  if (!(radius_min > 0) || radius_max < radius_min || radius_max > 0.45) {
    throw ConfigError("radius range must satisfy 0 < min <= max <= 0.45");
  }
  if (contrast_min < 0 || contrast_max < contrast_min) {
    throw ConfigError("contrast range is invalid");
  }
  if (background_min < 0 || background_max > 1 || background_max < background_min) {
    throw ConfigError("background range must lie in [0, 1]");
  }
  if (interior_freq_max < interior_freq_min || background_freq_max < background_freq_min) {
    throw ConfigError("frequency ranges are invalid");
  }
  if (interior_amplitude < 0 || background_amplitude < 0 || noise < 0 ||
      !(edge_width > 0)) {
    throw ConfigError("amplitudes and noise must be >= 0, edge_width > 0");
  }
  if (!(train_fraction > 0) || !(train_fraction < 1)) {
    throw ConfigError("train_fraction must be in (0, 1)");
  }
}

nlohmann::json SynthSpec::to_json() const {
  return {{"n_samples", n_samples},
          {"size", size},
          {"channels", channels},
          {"shapes", shape_family_name(shapes)},
          {"radius_min", radius_min},
          {"radius_max", radius_max},
          {"background_min", background_min},
          {"background_max", background_max},
          {"contrast_min", contrast_min},
          {"contrast_max", contrast_max},
          {"random_polarity", random_polarity},
          {"interior_amplitude", interior_amplitude},
          {"interior_freq_min", interior_freq_min},
          {"interior_freq_max", interior_freq_max},
          {"background_amplitude", background_amplitude},
          {"background_freq_min", background_freq_min},
          {"background_freq_max", background_freq_max},
          {"edge_width", edge_width},
          {"noise", noise},
          {"train_fraction", train_fraction},
          {"seed", seed.value}};
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Grating {
  double fx, fy, phase, amplitude;
  double at(double x, double y) const {
    return amplitude * std::sin(kTwoPi * (fx * x + fy * y) + phase);
  }
};

Grating random_grating(Rng& rng, double fmin, double fmax, double amplitude) {
  const double f = rng.uniform(fmin, fmax);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  return {f * std::cos(theta), f * std::sin(theta), rng.uniform(0.0, kTwoPi),
          amplitude};
}

// Star-shaped region: normalized radius compared against a harmonic outline.
struct Shape {
  double cx, cy, ra, rb, rot;
  double harm_amp[3] = {0, 0, 0};
  double harm_phase[3] = {0, 0, 0};

  // Negative inside; roughly a signed distance in pixels near the boundary.
  double level(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = dx * std::cos(rot) + dy * std::sin(rot);
    const double v = -dx * std::sin(rot) + dy * std::cos(rot);
    const double rho = std::hypot(u / ra, v / rb);
    const double phi = std::atan2(v / rb, u / ra);
    double outline = 1.0;
    for (int k = 0; k < 3; ++k) {
      outline += harm_amp[k] * std::cos((k + 2) * phi + harm_phase[k]);
    }
    return (rho - outline) * std::sqrt(ra * rb);
  }
};

Shape random_shape(Rng& rng, const SynthSpec& spec, bool blob) {
  const double s = spec.size;
  Shape sh;
  const double r = rng.uniform(spec.radius_min, spec.radius_max) * s;
  const double aspect = rng.uniform(0.65, 1.0);
  sh.ra = r;
  sh.rb = r * aspect;
  const double margin = r + 2.0;
  sh.cx = rng.uniform(std::min(margin, s / 2), std::max(s - margin, s / 2));
  sh.cy = rng.uniform(std::min(margin, s / 2), std::max(s - margin, s / 2));
  sh.rot = rng.uniform(0.0, std::numbers::pi);
  if (blob) {
    for (int k = 0; k < 3; ++k) {
      sh.harm_amp[k] = rng.uniform(0.0, 0.12 / (k + 1));
      sh.harm_phase[k] = rng.uniform(0.0, kTwoPi);
    }
  }
  return sh;
}

Sample make_sample(const SynthSpec& spec, int index) {
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(index)));
  const int n = spec.size;
  const double total = static_cast<double>(n) * n;
  bool blob = spec.shapes == ShapeFamily::kBlob ||
              (spec.shapes == ShapeFamily::kMixed && rng.uniform() < 0.5);
  Shape shape;
  BinaryMap mask;
  for (int attempt = 0;; ++attempt) {
    shape = random_shape(rng, spec, blob);
    mask = BinaryMap(n, n);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) mask.set(y, x, shape.level(x + 0.5, y + 0.5) < 0);
    }
    const double frac = mask.count() / total;
    if (frac >= 0.05 && frac <= 0.60) break;
    if (attempt > 100) throw ConfigError("cannot draw a mask with 5-60% foreground");
  }

  const double bg = rng.uniform(spec.background_min, spec.background_max);
  double contrast = rng.uniform(spec.contrast_min, spec.contrast_max);
  if (spec.random_polarity ? rng.uniform() < 0.5 : true) contrast = -contrast;
  const Grating inner = random_grating(rng, spec.interior_freq_min,
                                       spec.interior_freq_max,
                                       spec.interior_amplitude);
  const Grating outer = random_grating(rng, spec.background_freq_min,
                                       spec.background_freq_max,
                                       spec.background_amplitude);
  double tint[3] = {1.0, 1.0, 1.0};
  if (spec.channels == 3) {
    for (double& t : tint) t = rng.uniform(0.85, 1.15);
  }

  RealField f(n, n, spec.channels);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      // Soft membership consistent with the hard mask at the 0.5 level.
      const double m = 1.0 / (1.0 + std::exp(shape.level(px, py) / spec.edge_width));
      const double base = bg + outer.at(px, py);
      const double roi = bg + contrast + inner.at(px, py);
      const double value = (1.0 - m) * base + m * roi;
      for (int c = 0; c < spec.channels; ++c) {
        const double noisy = value * tint[c] + spec.noise * rng.normal();
        f(y, x, c) = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
      }
    }
  }
  char id[32];
  std::snprintf(id, sizeof id, "s%04d", index);
  return Sample{id, ImagePlane::from_field(std::move(f)), std::move(mask)};
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Dataset d;
  const int n_train = std::clamp(
      static_cast<int>(std::lround(spec.train_fraction * spec.n_samples)), 0,
      spec.n_samples);
  for (int i = 0; i < spec.n_samples; ++i) {
    Sample s = make_sample(spec, i);
    (i < n_train ? d.train : d.test).push_back(std::move(s));
  }
  return d;
}

}  // namespace umed
