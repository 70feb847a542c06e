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

#include "umed/dataio.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "umed/image_io.h"

namespace umed {

namespace fs = std::filesystem;
using nlohmann::json;

int Dataset::channels() const {
  if (!train.empty()) return train.front().image.channels();
  if (!test.empty()) return test.front().image.channels();
  return 0;
}

int Dataset::image_size() const {
  if (!train.empty()) return train.front().image.height();
  if (!test.empty()) return test.front().image.height();
  return 0;
}

// ---- resizing ----

ImagePlane resize_bilinear(const ImagePlane& image, int height, int width) {
  if (height < 1 || width < 1) throw DimensionError("resize target must be positive");
  if (image.height() == height && image.width() == width) return image;
  const int ih = image.height(), iw = image.width();
  RealField out(height, width, image.channels());
  const double sy = static_cast<double>(ih) / height;
  const double sx = static_cast<double>(iw) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, ih - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, ih - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, iw - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, iw - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double top = image(y0, x0, c) * (1 - wx) + image(y0, x1, c) * wx;
        const double bot = image(y1, x0, c) * (1 - wx) + image(y1, x1, c) * wx;
        out(y, x, c) = static_cast<float>(
            std::clamp(top * (1 - wy) + bot * wy, 0.0, 1.0));
      }
    }
  }
  return ImagePlane::from_field(std::move(out));
}

BinaryMap resize_nearest(const BinaryMap& mask, int height, int width) {
  if (height < 1 || width < 1) throw DimensionError("resize target must be positive");
  if (mask.height() == height && mask.width() == width) return mask;
  BinaryMap out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height() - 1,
                            static_cast<int>((y + 0.5) * mask.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width() - 1,
                              static_cast<int>((x + 0.5) * mask.width() / width));
      out.set(y, x, mask(sy, sx));
    }
  }
  return out;
}

// ---- loading ----

json read_manifest(const fs::path& root) {
  const fs::path p = root / "manifest.json";
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IngestionError("malformed manifest " + p.string() + ": " + e.what());
  }
}

namespace {

struct PairEntry {
  std::string id;
  fs::path image;
  fs::path mask;
};

std::vector<PairEntry> list_pairs(const fs::path& root, const std::string& split) {
  std::vector<PairEntry> pairs;
  const fs::path manifest = root / "manifest.json";
  if (fs::exists(manifest)) {
    json m = read_manifest(root);
    if (m.contains("splits") && m["splits"].contains(split)) {
      for (const auto& e : m["splits"][split]) {
        pairs.push_back({e.at("id").get<std::string>(),
                         root / e.at("image").get<std::string>(),
                         root / e.at("mask").get<std::string>()});
      }
      return pairs;
    }
  }
  const fs::path images = root / split / "images";
  if (!fs::is_directory(images)) {
    throw IngestionError("missing directory " + images.string());
  }
  for (const auto& entry : fs::directory_iterator(images)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string name = entry.path().filename().string();
    pairs.push_back({entry.path().stem().string(), entry.path(),
                     root / split / "masks" / name});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const PairEntry& a, const PairEntry& b) { return a.id < b.id; });
  return pairs;
}

}  // namespace

std::vector<Sample> load_split(const fs::path& root, const std::string& split,
                               const LoadOptions& opt) {
  std::vector<Sample> out;
  for (const PairEntry& p : list_pairs(root, split)) {
    if (!fs::exists(p.image)) throw IngestionError("missing image " + p.image.string());
    if (!fs::exists(p.mask)) throw IngestionError("missing mask " + p.mask.string());
    RawImage img = read_png(p.image);
    RawImage msk = read_png(p.mask);
    Sample s;
    s.id = p.id;
    s.image = to_image_plane(img);
    s.mask = to_mask(msk);
    if (opt.image_size > 0) {
      s.image = resize_bilinear(s.image, opt.image_size, opt.image_size);
      s.mask = resize_nearest(s.mask, opt.image_size, opt.image_size);
    }
    if (s.image.height() != s.mask.height() || s.image.width() != s.mask.width()) {
      throw IngestionError("image " + p.image.string() + " and mask " +
                           p.mask.string() + " differ in size");
    }
    out.push_back(std::move(s));
  }
  return out;
}

Dataset load_dataset(const fs::path& root, const LoadOptions& opt) {
  if (!fs::is_directory(root)) throw IngestionError("no dataset at " + root.string());
  Dataset d;
  d.train = load_split(root, "train", opt);
  d.test = load_split(root, "test", opt);
  return d;
}

// ---- saving ----

namespace {

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

json write_split(const fs::path& root, const std::string& split,
                 std::span<const Sample> samples, int bit_depth) {
  ensure_dir(root / split / "images");
  ensure_dir(root / split / "masks");
  json entries = json::array();
  for (const Sample& s : samples) {
    const std::string image = split + "/images/" + s.id + ".png";
    const std::string mask = split + "/masks/" + s.id + ".png";
    write_png(root / image, quantize(s.image, bit_depth));
    write_png(root / mask, mask_to_raw(s.mask));
    entries.push_back({{"id", s.id}, {"image", image}, {"mask", mask}});
  }
  return entries;
}

json base_manifest(int height, int width, int channels, int bit_depth) {
  return {{"format", "umed-dataset"},
          {"version", 1},
          {"height", height},
          {"width", width},
          {"channels", channels},
          {"bit_depth", bit_depth}};
}

void write_manifest(const fs::path& root, const json& manifest) {
  const fs::path p = root / "manifest.json";
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + p.string());
}

void merge_into(json& dst, const json& extra) {
  if (!extra.is_object()) return;
  for (auto it = extra.begin(); it != extra.end(); ++it) dst[it.key()] = it.value();
}

}  // namespace

json save_dataset(const Dataset& data, const fs::path& root, int bit_depth,
                  const json& extra) {
  const Sample* first = !data.train.empty() ? &data.train.front()
                        : !data.test.empty() ? &data.test.front()
                                             : nullptr;
  if (!first) throw ConfigError("dataset is empty");
  json m = base_manifest(first->image.height(), first->image.width(),
                         first->image.channels(), bit_depth);
  m["splits"]["train"] = write_split(root, "train", data.train, bit_depth);
  m["splits"]["test"] = write_split(root, "test", data.test, bit_depth);
  merge_into(m, extra);
  write_manifest(root, m);
  return m;
}

bool eight_bit_erases_texture(const ProtectorState& state) {
  if (state.kind != ProtectorKind::kUmed || !state.umed.texture_enabled) return false;
  const double smallest =
      state.epsilon.value() * (state.umed.lbp_guided ? state.texture_floor : 1.0);
  return smallest < 1.0 / 255.0;
}

json protector_json(const ProtectorState& state) {
  json j = {{"kind", protector_kind_name(state.kind)},
            {"epsilon", state.epsilon.str()},
            {"band_width", state.band.band_width},
            {"lbp", {{"neighbors", state.lbp.neighbors}, {"radius", state.lbp.radius}}},
            {"texture_floor", state.texture_floor}};
  if (state.kind == ProtectorKind::kUmed) {
    j["contour"] = state.umed.contour_enabled;
    j["texture"] = state.umed.texture_enabled;
    j["lbp_guided"] = state.umed.lbp_guided;
    j["contour_generator"] = state.contour_spec.to_json();
    j["texture_generator"] = state.texture_spec.to_json();
  } else if (state.kind == ProtectorKind::kEm) {
    j["em_region"] = em_region_name(state.em_region);
  }
  return j;
}

json save_protected(std::span<const ProtectedSample> train,
                    std::span<const Sample> test, const fs::path& root,
                    const ProtectorState& state, const SaveOptions& opt,
                    const json& extra, std::vector<std::string>* warnings) {
  if (opt.bit_depth != 8 && opt.bit_depth != 16) {
    throw ConfigError("bit depth must be 8 or 16");
  }
  if (train.empty()) throw ConfigError("no protected samples to save");
  if (opt.bit_depth == 8 && eight_bit_erases_texture(state)) {
    if (!opt.allow_lossy_8bit) {
      throw ConfigError(
          "8-bit output would quantize texture perturbations below one step; "
          "use 16-bit output or allow lossy 8-bit explicitly");
    }
    if (warnings) {
      warnings->push_back(
          "8-bit output: texture perturbations below 1/255 are lost to quantization");
    }
  }
  const ImagePlane& first = train.front().image;
  for (const auto& s : train) {
    if (!s.image.field().same_shape(first.field())) {
      throw DimensionError("protected samples differ in shape");
    }
  }
  json m = base_manifest(first.height(), first.width(), first.channels(),
                         opt.bit_depth);
  m["protector"] = protector_json(state);

  std::vector<Sample> plain;
  plain.reserve(train.size());
  for (const auto& s : train) plain.push_back({s.id, s.image, s.mask});
  m["splits"]["train"] = write_split(root, "train", plain, opt.bit_depth);
  m["splits"]["test"] = write_split(root, "test", test, opt.bit_depth);

  if (opt.write_deltas) {
    ensure_dir(root / "train" / "deltas");
    json files = json::object();
    for (const auto& s : train) {
      const std::string rel = "train/deltas/" + s.id + ".f32";
      write_delta_sidecar(root / rel, s.total_delta());
      files[s.id] = rel;
    }
    m["deltas"] = {{"dtype", "float32-le"},
                   {"layout", "yxc"},
                   {"height", first.height()},
                   {"width", first.width()},
                   {"channels", first.channels()},
                   {"files", files}};
  }
  merge_into(m, extra);
  write_manifest(root, m);
  return m;
}

void write_delta_sidecar(const fs::path& path, const RealField& delta) {
  std::vector<unsigned char> bytes(delta.size() * 4);
  std::size_t k = 0;
  for (int y = 0; y < delta.height(); ++y) {
    for (int x = 0; x < delta.width(); ++x) {
      for (int c = 0; c < delta.channels(); ++c) {
        std::uint32_t bits;
        const float v = delta(y, x, c);
        std::memcpy(&bits, &v, 4);
        for (int b = 0; b < 4; ++b) bytes[k++] = (bits >> (8 * b)) & 0xff;
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!out) throw IoError("cannot write " + path.string());
}

RealField read_delta_sidecar(const fs::path& path, int height, int width,
                             int channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  RealField f(height, width, channels);
  std::vector<unsigned char> bytes(f.size() * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()) ||
      in.peek() != std::char_traits<char>::eof()) {
    throw IngestionError("sidecar " + path.string() + " has the wrong size");
  }
  std::size_t k = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes[k++]} << (8 * b);
        float v;
        std::memcpy(&v, &bits, 4);
        f(y, x, c) = v;
      }
    }
  }
  return f;
}

}  // namespace umed
