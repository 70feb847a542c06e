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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "commands.h"
#include "config.h"
#include "umed/dataio.h"

namespace umed::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* no_env(const std::string&) { return nullptr; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("umed_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  // Small, fast settings shared by the pipeline tests.
  json config(std::vector<std::pair<std::string, std::string>> extra) const {
    std::vector<std::pair<std::string, std::string>> o = {
        {"synth.n_samples", "10"},       {"synth.size", "16"},
        {"image_size", "16"},            {"generator.depth", "2"},
        {"generator.base_channels", "4"}, {"surrogate.depth", "2"},
        {"surrogate.base_channels", "4"}, {"exploiter_net.depth", "2"},
        {"exploiter_net.base_channels", "4"}, {"umed_train.epochs", "2"},
        {"umed_train.batch_size", "4"},  {"em.rounds", "1"},
        {"em.steps", "2"},               {"em.batch_size", "4"},
        {"train.epochs", "1"},           {"train.batch_size", "4"}};
    o.insert(o.end(), extra.begin(), extra.end());
    return resolve_config({}, o, no_env);
  }
  std::string at(const char* rel) const { return (root_ / rel).string(); }

  fs::path root_;
};

TEST(Config, DefaultsMirrorLibrary) {
  const json d = default_config();
  EXPECT_EQ(d["epsilon"], "4/255");
  EXPECT_EQ(d["synth"]["n_samples"], 200);
  EXPECT_EQ(d["synth"]["size"], 64);
  EXPECT_EQ(d["umed_train"]["epochs"], 100);
  EXPECT_EQ(d["umed_train"]["schedule_modulus"], 5);
  EXPECT_EQ(d["train"]["epochs"], 150);
  EXPECT_EQ(d["train"]["batch_size"], 32);
  EXPECT_EQ(d["defenses"]["jpeg_quality"], 60);
  const SynthSpec s = synth_spec(d);
  EXPECT_EQ(s.n_samples, 200);
}

TEST(Config, PrecedenceCliOverEnvOverFile) {
  const fs::path file = fs::temp_directory_path() / "umed_cfg_precedence.json";
  std::ofstream(file) << R"({"train": {"epochs": 7, "lr": 0.5}, "seed": 3})";
  std::map<std::string, std::string> env = {{"UMED_TRAIN__EPOCHS", "9"},
                                            {"UMED_TRAIN__LR", "0.25"}};
  auto lookup = [&](const std::string& k) -> const char* {
    auto it = env.find(k);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  json c = resolve_config(file, {{"train.epochs", "11"}}, lookup);
  EXPECT_EQ(c["train"]["epochs"], 11);
  EXPECT_EQ(c["train"]["lr"], 0.25);
  EXPECT_EQ(c["seed"], 3);
  c = resolve_config(file, {}, no_env);
  EXPECT_EQ(c["train"]["epochs"], 7);
  fs::remove(file);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(resolve_config({}, {{"trian.epochs", "3"}}, no_env), ConfigError);
  EXPECT_THROW(resolve_config({}, {{"train", "3"}}, no_env), ConfigError);
  EXPECT_THROW(resolve_config({}, {{"train.epochs", "3.5"}}, no_env), ConfigError);
  EXPECT_THROW(resolve_config({}, {{"output.write_deltas", "yes"}}, no_env), ConfigError);
  const fs::path file = fs::temp_directory_path() / "umed_cfg_unknown.json";
  std::ofstream(file) << R"({"train": {"epoch": 7}})";
  EXPECT_THROW(resolve_config(file, {}, no_env), ConfigError);
  std::ofstream(file) << R"({"train": {"epochs": "7"}})";
  EXPECT_THROW(resolve_config(file, {}, no_env), ConfigError);
  std::ofstream(file) << R"({"train": {"lr": 1}})";
  EXPECT_EQ(resolve_config(file, {}, no_env)["train"]["lr"], 1.0);
  fs::remove(file);
  EXPECT_THROW(protector_settings(resolve_config({}, {{"epsilon", "4/0"}}, no_env)),
               ConfigError);
}

TEST(Config, OverrideTokensAndEnvNames) {
  const auto o = parse_overrides({"--a.b", "1", "--c=x=y", "--d", "--e"});
  ASSERT_EQ(o.size(), 3u);
  EXPECT_EQ(o[0], (std::pair<std::string, std::string>{"a.b", "1"}));
  EXPECT_EQ(o[1], (std::pair<std::string, std::string>{"c", "x=y"}));
  EXPECT_EQ(o[2], (std::pair<std::string, std::string>{"d", "--e"}));
  EXPECT_THROW(parse_overrides({"stray"}), ConfigError);
  EXPECT_THROW(parse_overrides({"--dangling"}), ConfigError);
  EXPECT_EQ(env_name("umed_train.lr_generator"), "UMED_UMED_TRAIN__LR_GENERATOR");
}

TEST_F(Workdir, SynthIsReproducibleAndEchoesConfig) {
  cmd_synth(config({{"out", at("a")}}));
  cmd_synth(config({{"out", at("b")}}));
  for (const auto& e : fs::recursive_directory_iterator(root_ / "a")) {
    if (!e.is_regular_file() || e.path().filename() == "config.json") continue;
    const fs::path rel = fs::relative(e.path(), root_ / "a");
    EXPECT_EQ(slurp(e.path()), slurp(root_ / "b" / rel)) << rel;
  }
  EXPECT_EQ(json::parse(slurp(root_ / "a" / "config.json"))["synth"]["n_samples"], 10);
  EXPECT_EQ(load_dataset(root_ / "a").train.size(), 8u);
}

TEST_F(Workdir, ProtectNoneCopiesBytes) {
  cmd_synth(config({{"out", at("d")}}));
  cmd_protect(config({{"data", at("d")}, {"out", at("p")}, {"protector", "none"}}));
  for (const auto& e : fs::directory_iterator(root_ / "d" / "train" / "images")) {
    EXPECT_EQ(slurp(e.path()), slurp(root_ / "p" / "train" / "images" / e.path().filename()));
  }
  EXPECT_EQ(read_manifest(root_ / "p")["protector"]["kind"], "none");
}

TEST_F(Workdir, ProtectUmedStaysInBudgetAndEmWritesSidecars) {
  cmd_synth(config({{"out", at("d")}}));
  cmd_protect(config({{"data", at("d")}, {"out", at("u")}, {"protector", "umed"},
                      {"output.write_deltas", "true"}}));
  const json m = read_manifest(root_ / "u");
  EXPECT_EQ(m["protector"]["epsilon"], "4/255");
  const Dataset clean = load_dataset(root_ / "d");
  const float eps = 4.0f / 255.0f;
  for (const Sample& s : clean.train) {
    const RealField d = read_delta_sidecar(
        root_ / "u" / m["deltas"]["files"][s.id].get<std::string>(), 16, 16, 1);
    for (float v : d.values()) EXPECT_LE(std::abs(v), 2 * eps);
  }
  EXPECT_TRUE(fs::exists(root_ / "u" / "protector" / "contour_generator.ckpt"));
  EXPECT_TRUE(fs::exists(root_ / "u" / "train_log.jsonl"));

  cmd_protect(config({{"data", at("d")}, {"out", at("e")}, {"protector", "em"}}));
  for (const Sample& s : clean.train) {
    EXPECT_TRUE(fs::exists(root_ / "e" / "train" / "deltas" / (s.id + ".f32"))) << s.id;
  }
}

TEST_F(Workdir, EvalReportPipeline) {
  cmd_synth(config({{"out", at("d")}}));
  cmd_train(config({{"data", at("d")}, {"out", at("m")}}));
  cmd_eval(config({{"data", at("d")}, {"model", at("m/model.ckpt")}, {"out", at("cells/a")}}));
  const json cell = json::parse(slurp(root_ / "cells" / "a" / "metrics.json"));
  EXPECT_TRUE(cell["invisibility"]["psnr"].is_null());
  EXPECT_EQ(cell["invisibility"]["psnr_infinite"], true);
  EXPECT_TRUE(fs::exists(root_ / "cells" / "a" / "done"));

  cmd_defend(config({{"data", at("d")}, {"out", at("mb")}, {"defense", "blur"}}));
  cmd_eval(config({{"data", at("d")}, {"model", at("mb/model.ckpt")}, {"out", at("cells/b")}}));
  // An unfinished cell is ignored.
  fs::create_directories(root_ / "cells" / "c");
  fs::copy_file(root_ / "cells" / "a" / "metrics.json", root_ / "cells" / "c" / "metrics.json");

  cmd_report(config({{"cells", at("cells")}, {"out", at("r")}}));
  std::ifstream csv(root_ / "r" / "matrix.csv");
  std::vector<std::string> lines;
  for (std::string l; std::getline(csv, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "protector,exploiter,defense,status,dsc,jaccard,psnr,ssim");
  EXPECT_NE(lines[2].find(",blur,"), std::string::npos);
  EXPECT_TRUE(fs::exists(root_ / "r" / "dsc.png"));

  // Reruns are byte-identical.
  const std::string first = slurp(root_ / "cells" / "a" / "metrics.json");
  cmd_eval(config({{"data", at("d")}, {"model", at("m/model.ckpt")}, {"out", at("cells/a")}}));
  EXPECT_EQ(slurp(root_ / "cells" / "a" / "metrics.json"), first);
}

TEST_F(Workdir, MissingInputsAreIngestionErrors) {
  EXPECT_THROW(cmd_protect(config({{"data", at("none")}, {"out", at("p")}})), IngestionError);
  EXPECT_THROW(cmd_report(config({{"cells", at("none")}, {"out", at("r")}})), IngestionError);
  EXPECT_THROW(cmd_train(config({{"out", at("m")}})), ConfigError);
}

int run(const std::string& args) {
  const std::string cmd = std::string(UMED_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST_F(Workdir, ExitCodes) {
  EXPECT_EQ(run("synth --out " + at("ok") + " --synth.n_samples 4 --synth.size 16"), 0);
  EXPECT_EQ(run("synth --out " + at("bad") + " --synth.n_samples 0"), 2);
  EXPECT_EQ(run("synth --out " + at("bad") + " --no.such.key 1"), 2);
  EXPECT_EQ(run("eval --data " + at("missing") + " --model x --out " + at("e")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train --data " + at("ok") + " --out " + at("m") +
                " --image_size 16 --exploiter_net.depth 2 --exploiter_net.base_channels 4"
                " --train.lr 1e30 --train.grad_clip 0 --train.epochs 3"),
            3);
}

}  // namespace
}  // namespace umed::cli
