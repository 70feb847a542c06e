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

#include "config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

namespace umed::cli {

using nlohmann::json;

json default_config() {
  json synth = SynthSpec{}.to_json();
  synth.erase("seed");
  const TrainConfig u = TrainConfig::umed_defaults();
  const TrainConfig e = TrainConfig::exploiter_defaults();
  const EmConfig em;
  const AdversarialConfig adv;
  return {
      {"seed", 0},
      {"data", ""},       // input dataset directory
      {"reference", ""},  // clean dataset for invisibility metrics
      {"model", ""},      // exploiter checkpoint for eval
      {"out", ""},
      {"cells", ""},      // report: directory scanned for finished cells
      {"image_size", 64},
      {"synth", synth},
      {"protector", "umed"},
      {"exploiter", "unet"},
      {"defense", "none"},
      {"epsilon", "4/255"},
      {"band_width", 1},
      {"lbp", {{"neighbors", 8}, {"radius", 1}}},
      {"texture_floor", 0.1},
      {"surrogate", {{"arch", "unet"}, {"depth", 4}, {"base_channels", 16}}},
      {"generator", {{"depth", 4}, {"base_channels", 16}}},
      {"umed_train",
       {{"epochs", u.epochs},
        {"batch_size", u.batch_size},
        {"lr_surrogate", u.lr_surrogate},
        {"lr_generator", u.lr_generator},
        {"schedule_modulus", u.schedule_modulus},
        {"grad_clip", u.grad_clip}}},
      {"em",
       {{"rounds", em.rounds},
        {"steps", em.steps},
        {"step_fraction", em.step_fraction},
        {"batch_size", u.batch_size},
        {"lr_surrogate", u.lr_surrogate},
        {"grad_clip", u.grad_clip}}},
      {"exploiter_net", {{"depth", 4}, {"base_channels", 16}}},
      {"train",
       {{"epochs", e.epochs},
        {"batch_size", e.batch_size},
        {"lr", e.lr_exploiter},
        {"grad_clip", e.grad_clip}}},
      {"defenses",
       {{"jpeg_quality", 60},
        {"blur_kernel", 3},
        {"blur_sigma", 0.8},
        {"adv_epsilon", adv.epsilon.str()},
        {"adv_steps", adv.steps},
        {"adv_step_size", adv.step_size},
        {"adv_random_start", adv.random_start}}},
      {"output", {{"bit_depth", 16}, {"write_deltas", false}, {"allow_lossy_8bit", false}}},
  };
}

std::string env_name(const std::string& dotted) {
  std::string out = "UMED_";
  for (char c : dotted) {
    if (c == '.') {
      out += "__";
    } else {
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

namespace {

json* find_slot(json& root, const std::string& dotted) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

// Converts text to the JSON type of `like`.
json parse_value(const std::string& key, const std::string& text, const json& like) {
  auto bad = [&] {
    return ConfigError("bad value '" + text + "' for '" + key + "'");
  };
  if (like.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw bad();
  }
  if (like.is_number_integer()) {
    long long v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) throw bad();
    return v;
  }
  if (like.is_number()) {
    double v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) throw bad();
    return v;
  }
  if (like.is_string()) return text;
  throw ConfigError("'" + key + "' is a section, not a value");
}

// Copies `src` into `dst`, refusing keys or types that `dst` does not have.
void merge_checked(json& dst, const json& src, const std::string& prefix) {
  if (!src.is_object()) throw ConfigError("config root must be an object");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!dst.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = dst[it.key()];
    const json& v = it.value();
    if (slot.is_object()) {
      merge_checked(slot, v, key);
      continue;
    }
    const bool ok = (slot.is_boolean() && v.is_boolean()) ||
                    (slot.is_number_integer() && v.is_number_integer()) ||
                    (slot.is_number_float() && v.is_number()) ||
                    (slot.is_string() && v.is_string());
    if (!ok) throw ConfigError("wrong type for config key '" + key + "'");
    slot = slot.is_number_float() ? json(v.get<double>()) : v;
  }
}

void collect_leaves(const json& node, const std::string& prefix,
                    std::vector<std::string>& out) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object()) {
      collect_leaves(it.value(), key, out);
    } else {
      out.push_back(key);
    }
  }
}

}  // namespace

json resolve_config(const std::filesystem::path& file,
                    const std::vector<std::pair<std::string, std::string>>& overrides,
                    const EnvLookup& env) {
  json cfg = default_config();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("malformed config file " + file.string() + ": " + e.what());
    }
    merge_checked(cfg, doc, "");
  }
  if (env) {
    std::vector<std::string> leaves;
    collect_leaves(cfg, "", leaves);
    for (const auto& key : leaves) {
      if (const char* v = env(env_name(key))) {
        json* slot = find_slot(cfg, key);
        *slot = parse_value(key, v, *slot);
      }
    }
  }
  for (const auto& [key, text] : overrides) {
    json* slot = find_slot(cfg, key);
    if (!slot) throw ConfigError("unknown config key '" + key + "'");
    *slot = parse_value(key, text, *slot);
  }
  return cfg;
}

std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& tokens) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t.rfind("--", 0) != 0 || t.size() == 2) {
      throw ConfigError("unexpected argument '" + t + "'");
    }
    const std::string body = t.substr(2);
    const std::size_t eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (i + 1 >= tokens.size()) throw ConfigError("missing value for '" + t + "'");
    out.emplace_back(body, tokens[++i]);
  }
  return out;
}

namespace {

RngSeed seed_of(const json& cfg) {
  return RngSeed{cfg.at("seed").get<std::uint64_t>()};
}

TrainConfig umed_train(const json& cfg) {
  const json& t = cfg.at("umed_train");
  TrainConfig c = TrainConfig::umed_defaults();
  c.epochs = t.at("epochs");
  c.batch_size = t.at("batch_size");
  c.lr_surrogate = t.at("lr_surrogate");
  c.lr_generator = t.at("lr_generator");
  c.schedule_modulus = t.at("schedule_modulus");
  c.grad_clip = t.at("grad_clip");
  c.seed = seed_of(cfg);
  c.validate();
  return c;
}

}  // namespace

SynthSpec synth_spec(const json& cfg) {
  const json& s = cfg.at("synth");
  SynthSpec spec;
  spec.n_samples = s.at("n_samples");
  spec.size = s.at("size");
  spec.channels = s.at("channels");
  spec.shapes = parse_shape_family(s.at("shapes").get<std::string>());
  spec.radius_min = s.at("radius_min");
  spec.radius_max = s.at("radius_max");
  spec.background_min = s.at("background_min");
  spec.background_max = s.at("background_max");
  spec.contrast_min = s.at("contrast_min");
  spec.contrast_max = s.at("contrast_max");
  spec.random_polarity = s.at("random_polarity");
  spec.interior_amplitude = s.at("interior_amplitude");
  spec.interior_freq_min = s.at("interior_freq_min");
  spec.interior_freq_max = s.at("interior_freq_max");
  spec.background_amplitude = s.at("background_amplitude");
  spec.background_freq_min = s.at("background_freq_min");
  spec.background_freq_max = s.at("background_freq_max");
  spec.edge_width = s.at("edge_width");
  spec.noise = s.at("noise");
  spec.train_fraction = s.at("train_fraction");
  spec.seed = seed_of(cfg);
  spec.validate();
  return spec;
}

LoadOptions load_options(const json& cfg) {
  LoadOptions o;
  o.image_size = cfg.at("image_size");
  if (o.image_size < 0) throw ConfigError("image_size must be >= 0");
  return o;
}

SaveOptions save_options(const json& cfg) {
  const json& o = cfg.at("output");
  SaveOptions s;
  s.bit_depth = o.at("bit_depth");
  s.write_deltas = o.at("write_deltas");
  s.allow_lossy_8bit = o.at("allow_lossy_8bit");
  if (s.bit_depth != 8 && s.bit_depth != 16) throw ConfigError("bit_depth must be 8 or 16");
  return s;
}

ProtectorSettings protector_settings(const json& cfg) {
  ProtectorSettings p;
  p.epsilon = Epsilon::parse(cfg.at("epsilon").get<std::string>());
  p.band.band_width = cfg.at("band_width");
  p.lbp.neighbors = cfg.at("lbp").at("neighbors");
  p.lbp.radius = cfg.at("lbp").at("radius");
  p.texture_floor = cfg.at("texture_floor").get<float>();
  const json& s = cfg.at("surrogate");
  p.surrogate.arch = parse_arch(s.at("arch").get<std::string>());
  p.surrogate.depth = s.at("depth");
  p.surrogate.base_channels = s.at("base_channels");
  p.surrogate.validate();
  p.generator_depth = cfg.at("generator").at("depth");
  p.generator_base_channels = cfg.at("generator").at("base_channels");
  p.umed_train = umed_train(cfg);
  const json& em = cfg.at("em");
  p.em.rounds = em.at("rounds");
  p.em.steps = em.at("steps");
  p.em.step_fraction = em.at("step_fraction");
  p.em_train = p.umed_train;
  p.em_train.batch_size = em.at("batch_size");
  p.em_train.lr_surrogate = em.at("lr_surrogate");
  p.em_train.grad_clip = em.at("grad_clip");
  p.em_train.validate();
  if (p.em.rounds < 1 || p.em.steps < 0) throw ConfigError("em.rounds >= 1, em.steps >= 0");
  return p;
}

ExploiterSettings exploiter_settings(const json& cfg) {
  ExploiterSettings e;
  e.depth = cfg.at("exploiter_net").at("depth");
  e.base_channels = cfg.at("exploiter_net").at("base_channels");
  const json& t = cfg.at("train");
  e.train.epochs = t.at("epochs");
  e.train.batch_size = t.at("batch_size");
  e.train.lr_exploiter = t.at("lr");
  e.train.grad_clip = t.at("grad_clip");
  e.train.seed = seed_of(cfg);
  e.train.validate();
  return e;
}

DefenseSettings defense_settings(const json& cfg) {
  const json& d = cfg.at("defenses");
  DefenseSettings s;
  s.jpeg_quality = d.at("jpeg_quality");
  s.blur_kernel = d.at("blur_kernel");
  s.blur_sigma = d.at("blur_sigma");
  s.adversarial.epsilon = Epsilon::parse(d.at("adv_epsilon").get<std::string>());
  s.adversarial.steps = d.at("adv_steps");
  s.adversarial.step_size = d.at("adv_step_size");
  s.adversarial.random_start = d.at("adv_random_start");
  if (s.adversarial.steps < 0) throw ConfigError("defenses.adv_steps must be >= 0");
  return s;
}

}  // namespace umed::cli
