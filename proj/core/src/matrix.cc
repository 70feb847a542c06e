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

#include "umed/matrix.h"

#include <chrono>
#include <cmath>
#include <fstream>

namespace umed {

using nlohmann::json;

const std::vector<std::string>& known_protectors() {
  static const std::vector<std::string> names{
      "none",          "umed",         "em",
      "umed_contour_only", "umed_texture_only", "umed_vanilla_contour",
      "umed_fixed_texture", "em_contour",  "em_roi"};
  return names;
}

const std::vector<std::string>& known_defenses() {
  static const std::vector<std::string> names{"none", "blur", "jpeg", "adv"};
  return names;
}

TrainedProtector build_protector(const std::string& name,
                                 std::span<const Sample> train,
                                 const ProtectorSettings& settings,
                                 const LogSink& sink) {
  if (train.empty()) throw ConfigError("training split is empty");
  const int channels = train.front().image.channels();
  NetSpec surrogate = settings.surrogate;
  surrogate.in_channels = channels;
  surrogate.out_channels = 1;
  surrogate.validate();

  TrainedProtector out;
  if (name == "none") {
    out.state.kind = ProtectorKind::kNone;
    out.state.epsilon = settings.epsilon;
    out.state.band = settings.band;
    out.state.lbp = settings.lbp;
    out.state.texture_floor = settings.texture_floor;
    return out;
  }
  if (name == "em" || name == "em_contour" || name == "em_roi") {
    EmConfig em = settings.em;
    em.region = name == "em" ? EmRegion::kFull
                : name == "em_contour" ? EmRegion::kContour
                                       : EmRegion::kRoi;
    EmTrainResult r = train_em(train, settings.em_train, surrogate,
                               settings.epsilon, em, settings.band, sink);
    out.state = std::move(r.state);
    out.state.lbp = settings.lbp;
    out.state.texture_floor = settings.texture_floor;
    out.log = std::move(r.log);
    return out;
  }
  UmedOptions options;
  bool vanilla_contour = false;
  if (name == "umed_contour_only") {
    options.texture_enabled = false;
  } else if (name == "umed_texture_only") {
    options.contour_enabled = false;
  } else if (name == "umed_vanilla_contour") {
    vanilla_contour = true;
  } else if (name == "umed_fixed_texture") {
    options.lbp_guided = false;
  } else if (name != "umed") {
    throw ConfigError("unknown protector '" + name + "'");
  }
  GeneratorSpecs specs = default_generator_specs(
      channels, settings.generator_depth, settings.generator_base_channels,
      vanilla_contour);
  ProtectorState initial = make_umed_state(
      specs, settings.epsilon, derive_seed(settings.umed_train.seed, "generators"),
      settings.band, settings.lbp, settings.texture_floor, options);
  UmedTrainResult r =
      train_umed(train, settings.umed_train, surrogate, std::move(initial), sink);
  out.state = std::move(r.state);
  out.log = std::move(r.log);
  return out;
}

std::vector<Sample> apply_defense(const std::string& name,
                                  std::span<const Sample> samples,
                                  const DefenseSettings& settings) {
  std::vector<Sample> out(samples.begin(), samples.end());
  if (name == "none") return out;
  if (name == "blur") {
    for (Sample& s : out) {
      s.image = gaussian_blur(s.image, settings.blur_kernel, settings.blur_sigma);
    }
    return out;
  }
  if (name == "jpeg") {
    for (Sample& s : out) s.image = jpeg_roundtrip(s.image, settings.jpeg_quality);
    return out;
  }
  if (name == "adv") {
    throw ConfigError("adversarial training is applied during training, not to images");
  }
  throw ConfigError("unknown defense '" + name + "'");
}

NetSpec exploiter_spec(const std::string& arch, int channels,
                       const ExploiterSettings& settings) {
  NetSpec spec;
  spec.arch = parse_arch(arch);
  spec.depth = settings.depth;
  spec.base_channels = settings.base_channels;
  spec.in_channels = channels;
  spec.out_channels = 1;
  spec.validate();
  return spec;
}

ExploiterResult train_defended_exploiter(std::span<const Sample> train,
                                         const NetSpec& spec,
                                         const std::string& defense,
                                         const ExploiterSettings& exploiter,
                                         const DefenseSettings& settings,
                                         const LogSink& sink) {
  if (defense == "adv") {
    return train_exploiter_adversarial(train, spec, exploiter.train,
                                       settings.adversarial, sink);
  }
  std::vector<Sample> defended = apply_defense(defense, train, settings);
  return train_exploiter(defended, spec, exploiter.train, sink);
}

json MatrixCell::to_json(bool per_sample) const {
  json j = {{"protector", protector},
            {"exploiter", exploiter},
            {"defense", defense},
            {"status", ok ? "ok" : "failed"}};
  // Wall time is left out when unset so that reruns produce identical files.
  if (seconds > 0) j["seconds"] = seconds;
  if (!ok) {
    j["error"] = error;
    return j;
  }
  j["segmentation"] = segmentation.to_json(per_sample);
  j["invisibility"] = invisibility.to_json(per_sample);
  return j;
}

MatrixCell MatrixCell::from_json(const json& j) {
  MatrixCell c;
  c.protector = j.at("protector").get<std::string>();
  c.exploiter = j.at("exploiter").get<std::string>();
  c.defense = j.at("defense").get<std::string>();
  c.ok = j.at("status").get<std::string>() == "ok";
  c.seconds = j.value("seconds", 0.0);
  if (!c.ok) {
    c.error = j.value("error", "");
    return c;
  }
  const json& seg = j.at("segmentation");
  c.segmentation.mean_dsc = seg.at("dsc").get<double>();
  c.segmentation.mean_jaccard = seg.at("jaccard").get<double>();
  if (seg.contains("per_sample")) {
    c.segmentation.dsc = seg["per_sample"]["dsc"].get<std::vector<double>>();
    c.segmentation.jaccard = seg["per_sample"]["jaccard"].get<std::vector<double>>();
  }
  const json& inv = j.at("invisibility");
  c.invisibility.mean_psnr = inv.at("psnr").is_null()
                                 ? kInfinitePsnr
                                 : inv.at("psnr").get<double>();
  c.invisibility.infinite_psnr = inv.value("infinite_psnr_count", 0);
  c.invisibility.mean_ssim = inv.at("ssim").get<double>();
  return c;
}

MatrixRunner::MatrixRunner(MatrixConfig config, const Dataset& data)
    : config_(std::move(config)), data_(data) {}

MatrixRunner::Entry& MatrixRunner::entry(const std::string& protector) {
  auto it = cache_.find(protector);
  if (it != cache_.end()) return it->second;
  Entry e;
  e.trained = build_protector(protector, data_.train, config_.protector);
  e.samples = protect_dataset(data_.train, e.trained.state);
  return cache_.emplace(protector, std::move(e)).first->second;
}

const std::vector<ProtectedSample>& MatrixRunner::protected_train(
    const std::string& protector) {
  return entry(protector).samples;
}

const ProtectorState& MatrixRunner::protector_state(const std::string& protector) {
  return entry(protector).trained.state;
}

MatrixCell MatrixRunner::run_cell(const std::string& protector,
                                  const std::string& exploiter,
                                  const std::string& defense) {
  MatrixCell cell;
  cell.protector = protector;
  cell.exploiter = exploiter;
  cell.defense = defense;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto& prot = protected_train(protector);
    std::vector<Sample> train;
    std::vector<ImagePlane> clean, protected_images;
    for (std::size_t i = 0; i < prot.size(); ++i) {
      train.push_back({prot[i].id, prot[i].image, prot[i].mask});
      clean.push_back(data_.train[i].image);
      protected_images.push_back(prot[i].image);
    }
    NetSpec spec = exploiter_spec(exploiter, data_.channels(), config_.exploiter);
    ExploiterResult r = train_defended_exploiter(train, spec, defense,
                                                 config_.exploiter, config_.defense);
    cell.segmentation = evaluate_segmentation(r.params, spec, data_.test);
    cell.invisibility = evaluate_invisibility(clean, protected_images);
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                               start)
                     .count();
  return cell;
}

std::vector<MatrixCell> MatrixRunner::run() {
  std::vector<MatrixCell> cells;
  for (const auto& p : config_.protectors) {
    for (const auto& e : config_.exploiters) {
      for (const auto& d : config_.defenses) cells.push_back(run_cell(p, e, d));
    }
  }
  return cells;
}

std::vector<MatrixCell> run_matrix(const MatrixConfig& config, const Dataset& data) {
  MatrixRunner runner(config, data);
  return runner.run();
}

namespace {

std::string fmt_number(double v) {
  if (std::isinf(v)) return "inf";
  json j = v;
  return j.dump();
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_matrix_csv(const std::filesystem::path& path,
                      std::span<const MatrixCell> cells) {
  std::ofstream out = open_csv(path);
  out << "protector,exploiter,defense,status,dsc,jaccard,psnr,ssim\n";
  for (const auto& c : cells) {
    out << c.protector << ',' << c.exploiter << ',' << c.defense << ','
        << (c.ok ? "ok" : "failed");
    if (c.ok) {
      out << ',' << fmt_number(c.segmentation.mean_dsc) << ','
          << fmt_number(c.segmentation.mean_jaccard) << ','
          << fmt_number(c.invisibility.mean_psnr) << ','
          << fmt_number(c.invisibility.mean_ssim);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

void write_matrix_long_csv(const std::filesystem::path& path,
                           std::span<const MatrixCell> cells) {
  std::ofstream out = open_csv(path);
  out << "protector,exploiter,defense,metric,value\n";
  for (const auto& c : cells) {
    if (!c.ok) continue;
    const std::pair<const char*, double> metrics[] = {
        {"dsc", c.segmentation.mean_dsc},
        {"jaccard", c.segmentation.mean_jaccard},
        {"psnr", c.invisibility.mean_psnr},
        {"ssim", c.invisibility.mean_ssim}};
    for (const auto& [name, value] : metrics) {
      out << c.protector << ',' << c.exploiter << ',' << c.defense << ',' << name
          << ',' << fmt_number(value) << '\n';
    }
  }
}

}  // namespace umed
