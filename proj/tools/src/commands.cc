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

#include "commands.h"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/core.h>

#include "chart.h"
#include "config.h"
#include "umed/dataio.h"
#include "umed/eval.h"
#include "umed/matrix.h"
#include "umed/nets.h"

namespace umed::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path require_path(const json& cfg, const char* key) {
  const std::string p = cfg.at(key).get<std::string>();
  if (p.empty()) throw ConfigError(fmt::format("'{}' must be set", key));
  return p;
}

fs::path prepare_out(const json& cfg) {
  const fs::path out = require_path(cfg, "out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed: " + path.string());
}

void echo_config(const fs::path& out, const json& cfg) {
  write_json(out / "config.json", cfg);
}

// Streams training records to train_log.jsonl and a short line to stderr.
class LogFile {
 public:
  explicit LogFile(const fs::path& path) : out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
  }
  LogSink sink() {
    return [this](const LogRecord& r) {
      out_ << r.to_json().dump() << '\n';
      out_.flush();
      fmt::print(stderr, "epoch {:>4}  {:<10}  loss {:.5f}\n", r.epoch,
                 r.updated_component, r.loss);
    };
  }

 private:
  std::ofstream out_;
};

Dataset load_input(const json& cfg) {
  const fs::path data = require_path(cfg, "data");
  if (!fs::exists(data)) throw IngestionError("no dataset at " + data.string());
  return load_dataset(data, load_options(cfg));
}

json manifest_or_empty(const fs::path& root) {
  return fs::exists(root / "manifest.json") ? read_manifest(root) : json::object();
}

void copy_tree(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing,
           ec);
  if (ec) throw IoError("cannot copy " + from.string() + ": " + ec.message());
}

void save_generators(const fs::path& dir, const ProtectorState& s) {
  fs::create_directories(dir);
  const json meta = protector_json(s);
  save_checkpoint(dir / "contour_generator.ckpt",
                  Checkpoint{s.contour_spec, s.contour_params, meta});
  save_checkpoint(dir / "texture_generator.ckpt",
                  Checkpoint{s.texture_spec, s.texture_params, meta});
}

void train_command(const json& cfg, const std::string& defense) {
  const fs::path out = prepare_out(cfg);
  echo_config(out, cfg);
  const Dataset data = load_input(cfg);
  if (data.train.empty()) throw ConfigError("training split is empty");
  const ExploiterSettings exploiter = exploiter_settings(cfg);
  const DefenseSettings defenses = defense_settings(cfg);
  const std::string arch = cfg.at("exploiter");
  const NetSpec spec = exploiter_spec(arch, data.channels(), exploiter);

  LogFile log(out / "train_log.jsonl");
  ExploiterResult r =
      train_defended_exploiter(data.train, spec, defense, exploiter, defenses, log.sink());

  const json manifest = manifest_or_empty(cfg.at("data").get<std::string>());
  json meta = {{"exploiter", arch},
               {"defense", defense},
               {"protector", manifest.value("protector_name", "none")},
               {"seed", cfg.at("seed")}};
  if (manifest.contains("source")) meta["source"] = manifest["source"];
  save_checkpoint(out / "model.ckpt", Checkpoint{spec, r.params, meta});
}

// Orders samples by id so that clean and protected splits pair up.
std::map<std::string, const Sample*> by_id(const std::vector<Sample>& samples) {
  std::map<std::string, const Sample*> m;
  for (const Sample& s : samples) m[s.id] = &s;
  return m;
}

}  // namespace

void cmd_synth(const json& cfg) {
  const SynthSpec spec = synth_spec(cfg);
  const fs::path out = prepare_out(cfg);
  const Dataset data = generate_synthetic(spec);
  save_dataset(data, out, 16, {{"synth", spec.to_json()}});
  echo_config(out, cfg);
  fmt::print(stderr, "wrote {} train / {} test samples to {}\n", data.train.size(),
             data.test.size(), out.string());
}

void cmd_protect(const json& cfg) {
  const std::string name = cfg.at("protector");
  if (std::find(known_protectors().begin(), known_protectors().end(), name) ==
      known_protectors().end()) {
    throw ConfigError("unknown protector '" + name + "'");
  }
  const fs::path src = require_path(cfg, "data");
  const ProtectorSettings settings = protector_settings(cfg);
  SaveOptions save = save_options(cfg);
  const Dataset data = load_input(cfg);
  const fs::path out = prepare_out(cfg);
  echo_config(out, cfg);
  const json extra = {{"protector_name", name},
                      {"source", fs::absolute(src).lexically_normal().string()}};

  if (name == "none" && fs::exists(src / "manifest.json") && fs::is_directory(src / "train") &&
      fs::is_directory(src / "test")) {
    // Identity protector: the stored files are copied untouched.
    copy_tree(src / "train", out / "train");
    copy_tree(src / "test", out / "test");
    json m = read_manifest(src);
    ProtectorState none;
    none.kind = ProtectorKind::kNone;
    none.epsilon = settings.epsilon;
    m["protector"] = protector_json(none);
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_json(out / "manifest.json", m);
    return;
  }

  LogFile log(out / "train_log.jsonl");
  TrainedProtector trained = build_protector(name, data.train, settings, log.sink());
  const std::vector<ProtectedSample> prot = protect_dataset(data.train, trained.state);
  if (trained.state.kind == ProtectorKind::kEm) save.write_deltas = true;
  std::vector<std::string> warnings;
  std::size_t empty_interior = 0;
  for (const auto& p : prot) empty_interior += p.warning ? 1 : 0;
  if (empty_interior > 0) {
    warnings.push_back(fmt::format("{} samples have an empty interior; their texture "
                                   "perturbation is zero",
                                   empty_interior));
  }
  json manifest = save_protected(prot, data.test, out, trained.state, save, extra, &warnings);
  if (trained.state.kind == ProtectorKind::kUmed) save_generators(out / "protector", trained.state);
  if (!warnings.empty()) {
    manifest["warnings"] = warnings;
    write_json(out / "manifest.json", manifest);
    for (const auto& w : warnings) fmt::print(stderr, "warning: {}\n", w);
  }
}

void cmd_train(const json& cfg) { train_command(cfg, "none"); }

void cmd_defend(const json& cfg) {
  const std::string defense = cfg.at("defense");
  if (std::find(known_defenses().begin(), known_defenses().end(), defense) ==
      known_defenses().end()) {
    throw ConfigError("unknown defense '" + defense + "'");
  }
  train_command(cfg, defense);
}

void cmd_eval(const json& cfg) {
  const fs::path data_root = require_path(cfg, "data");
  const fs::path model = require_path(cfg, "model");
  if (!fs::exists(model)) throw IngestionError("no model at " + model.string());
  const Checkpoint ckpt = load_checkpoint(model);
  const Dataset data = load_input(cfg);
  const json manifest = manifest_or_empty(data_root);

  // Invisibility compares the training images against their clean sources.
  fs::path reference = cfg.at("reference").get<std::string>();
  if (reference.empty()) {
    if (manifest.contains("source")) {
      reference = manifest["source"].get<std::string>();
    } else if (manifest.value("protector", json::object()).value("kind", "none") == "none") {
      reference = data_root;
    } else {
      throw ConfigError("'reference' must name the clean dataset of a protected set");
    }
  }
  const Dataset clean = load_dataset(reference, load_options(cfg));
  const auto prot_ids = by_id(data.train);
  const auto clean_ids = by_id(clean.train);
  std::vector<ImagePlane> a, b;
  for (const auto& [id, s] : prot_ids) {
    auto it = clean_ids.find(id);
    if (it == clean_ids.end()) throw IngestionError("no clean image for '" + id + "'");
    a.push_back(it->second->image);
    b.push_back(s->image);
  }

  const fs::path out = prepare_out(cfg);
  echo_config(out, cfg);
  fs::remove(out / "done");
  MatrixCell cell;
  cell.protector = ckpt.metadata.value("protector", manifest.value("protector_name", "none"));
  cell.exploiter = ckpt.metadata.value("exploiter", std::string(arch_name(ckpt.spec.arch)));
  cell.defense = ckpt.metadata.value("defense", "none");
  cell.segmentation = evaluate_segmentation(ckpt.params, ckpt.spec, data.test);
  cell.invisibility = evaluate_invisibility(a, b);
  cell.ok = true;
  write_json(out / "metrics.json", cell.to_json());
  std::ofstream(out / "done") << "ok\n";
  fmt::print(stderr, "dsc {:.4f}  jaccard {:.4f}  psnr {}  ssim {:.4f}\n",
             cell.segmentation.mean_dsc, cell.segmentation.mean_jaccard,
             std::isinf(cell.invisibility.mean_psnr)
                 ? std::string("inf")
                 : fmt::format("{:.2f}", cell.invisibility.mean_psnr),
             cell.invisibility.mean_ssim);
}

void cmd_report(const json& cfg) {
  const fs::path cells_root = require_path(cfg, "cells");
  if (!fs::is_directory(cells_root)) {
    throw IngestionError("no cell directory at " + cells_root.string());
  }
  std::vector<fs::path> finished;
  for (const auto& e : fs::recursive_directory_iterator(cells_root)) {
    if (e.is_regular_file() && e.path().filename() == "metrics.json" &&
        fs::exists(e.path().parent_path() / "done")) {
      finished.push_back(e.path());
    }
  }
  std::sort(finished.begin(), finished.end());
  std::vector<MatrixCell> cells;
  json merged = json::array();
  for (const auto& p : finished) {
    std::ifstream in(p);
    json j;
    try {
      j = json::parse(in);
      cells.push_back(MatrixCell::from_json(j));
    } catch (const json::exception& e) {
      throw IngestionError("malformed cell " + p.string() + ": " + e.what());
    }
    j["path"] = fs::relative(p.parent_path(), cells_root).generic_string();
    merged.push_back(std::move(j));
  }
  const fs::path out = prepare_out(cfg);
  echo_config(out, cfg);
  write_matrix_csv(out / "matrix.csv", cells);
  write_matrix_long_csv(out / "matrix_long.csv", cells);
  write_json(out / "cells.json", merged);
  write_dsc_chart(out / "dsc.png", cells);
  fmt::print(stderr, "merged {} cells into {}\n", cells.size(), (out / "matrix.csv").string());
}

}  // namespace umed::cli
