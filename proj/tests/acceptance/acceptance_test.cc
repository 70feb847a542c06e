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

// Acceptance run: ten checks with pinned tolerances and a fixed desk-scale
// recipe. Prints one PASS/FAIL line per criterion and exits nonzero when any
// criterion fails. `--only 1,2,5` restricts the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "../gradcheck.h"
#include "umed/dataio.h"
#include "umed/eval.h"
#include "umed/layers.h"
#include "umed/losses.h"
#include "umed/maskgeom.h"
#include "umed/matrix.h"
#include "umed/perturb.h"
#include "umed/texture.h"
#include "umed/train.h"

namespace umed {
namespace {

using nn::Tensor;
using nn::Var;
using Clock = std::chrono::steady_clock;

// ---- desk-scale recipe ----

constexpr std::uint64_t kSeed = 2026;
constexpr int kNetDepth = 3;
constexpr int kNetBase = 8;
constexpr double kLr = 1e-3;
constexpr int kBatch = 16;
constexpr int kExploiterEpochs = 30;
constexpr int kUmedEpochs = 50;
constexpr int kEmRounds = 10;

SynthSpec desk_synth() {
  SynthSpec s;  // library defaults: 200 samples at 64 x 64, 160/40 split
  s.seed = RngSeed{kSeed};
  return s;
}

ExploiterSettings desk_exploiter() {
  ExploiterSettings e;
  e.depth = kNetDepth;
  e.base_channels = kNetBase;
  e.train.epochs = kExploiterEpochs;
  e.train.batch_size = kBatch;
  e.train.lr_exploiter = kLr;
  e.train.seed = derive_seed(RngSeed{kSeed}, "exploiter");
  return e;
}

ProtectorSettings desk_protector() {
  ProtectorSettings p;
  p.surrogate.arch = Arch::kUnet;
  p.surrogate.depth = kNetDepth;
  p.surrogate.base_channels = kNetBase;
  p.generator_depth = kNetDepth;
  p.generator_base_channels = kNetBase;
  p.umed_train.epochs = kUmedEpochs;
  p.umed_train.batch_size = kBatch;
  p.umed_train.lr_surrogate = kLr;
  p.umed_train.lr_generator = kLr;
  p.umed_train.seed = derive_seed(RngSeed{kSeed}, "protector");
  p.em_train = p.umed_train;
  p.em.rounds = kEmRounds;
  return p;
}

// ---- shared artifacts, built on first use ----

struct Trained {
  double dsc = 0.0;
  double seconds = 0.0;
};

class Context {
 public:
  const Dataset& data() {
    if (!data_) data_ = generate_synthetic(desk_synth());
    return *data_;
  }

  const std::vector<ProtectedSample>& protected_set(const std::string& name) {
    auto it = protected_.find(name);
    if (it != protected_.end()) return it->second;
    const auto t0 = Clock::now();
    TrainedProtector p = build_protector(name, data().train, desk_protector());
    auto prot = protect_dataset(data().train, p.state);
    log_time("protector " + name, t0);
    return protected_.emplace(name, std::move(prot)).first->second;
  }

  std::vector<Sample> training_images(const std::string& protector) {
    if (protector == "none") return data().train;
    std::vector<Sample> out;
    for (const auto& p : protected_set(protector)) out.push_back({p.id, p.image, p.mask});
    return out;
  }

  // Clean-test DSC of an exploiter trained on `protector`'s training images.
  double dsc(const std::string& protector, const std::string& arch,
             const std::string& defense) {
    const std::string key = protector + "/" + arch + "/" + defense;
    auto it = dsc_.find(key);
    if (it != dsc_.end()) return it->second;
    const auto train = training_images(protector);
    const auto t0 = Clock::now();
    const ExploiterSettings ex = desk_exploiter();
    const DefenseSettings def;
    const NetSpec spec = exploiter_spec(arch, data().channels(), ex);
    ExploiterResult r = train_defended_exploiter(train, spec, defense, ex, def);
    const double d = evaluate_segmentation(r.params, spec, data().test).mean_dsc;
    log_time(fmt::format("exploiter {} (dsc {:.4f})", key, d), t0);
    return dsc_.emplace(key, d).first->second;
  }

 private:
  static void log_time(const std::string& what, Clock::time_point t0) {
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    fmt::print("    {} built in {:.1f} s\n", what, s);
    std::fflush(stdout);
  }

  std::optional<Dataset> data_;
  std::map<std::string, std::vector<ProtectedSample>> protected_;
  std::map<std::string, double> dsc_;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome(Context&)> run;
};

// ---- 1. budgets and regions ----

Outcome budgets_and_regions(Context&) {
  SynthSpec s = desk_synth();
  s.n_samples = 50;
  s.seed = derive_seed(RngSeed{kSeed}, "c1");
  const Dataset d = generate_synthetic(s);
  std::vector<Sample> samples = d.train;
  samples.insert(samples.end(), d.test.begin(), d.test.end());

  GeneratorSpecs specs = default_generator_specs(1, kNetDepth, kNetBase);
  specs.contour.zero_head = false;
  specs.texture.zero_head = false;
  ProtectorState state = make_umed_state(specs, Epsilon{}, derive_seed(RngSeed{kSeed}, "c1g"));
  const float eps = static_cast<float>(state.epsilon.value());

  long violations = 0, active = 0;
  for (const Sample& smp : samples) {
    const ProtectedSample p = protect_image(smp, state);
    const BinaryMap band = extract_contour_band(smp.mask, state.band);
    const BinaryMap interior = interior_map(smp.mask, band);
    const TextureMap tex = texture_intensity_map(smp.image, interior, state.lbp,
                                                 state.texture_floor);
    if (!(p.mask == smp.mask)) ++violations;
    for (int y = 0; y < smp.image.height(); ++y) {
      for (int x = 0; x < smp.image.width(); ++x) {
        const float dc = p.delta_c.delta(y, x), dt = p.delta_t.delta(y, x);
        const float bound_t = eps * tex.values(y, x) * (interior(y, x) ? 1.0f : 0.0f);
        if (std::abs(dc) > eps || (!band(y, x) && dc != 0.0f)) ++violations;
        if (std::abs(dt) > bound_t || (!interior(y, x) && dt != 0.0f)) ++violations;
        if (!band(y, x) && !interior(y, x) && p.image(y, x) != smp.image(y, x)) ++violations;
        active += (dc != 0.0f) + (dt != 0.0f);
      }
    }
  }
  return {violations == 0 && active > 0,
          fmt::format("{} samples, {} violations, {} nonzero perturbation entries",
                      samples.size(), violations, active)};
}

// ---- 2. CDC identities ----

Outcome cdc_identities(Context&) {
  Rng rng(derive_seed(RngSeed{kSeed}, "c2"));
  double worst_identity = 0, worst_vanilla = 0, worst_flat = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.below(2));
    const int cin = 1 + static_cast<int>(rng.below(3));
    const int cout = 1 + static_cast<int>(rng.below(3));
    const int h = 3 + static_cast<int>(rng.below(6));
    const int w = 3 + static_cast<int>(rng.below(6));
    const auto x = testing::random_tensor(rng, {n, cin, h, w});
    const auto wv = testing::random_tensor(rng, {cout, cin, 3, 3});
    const auto wc = testing::random_tensor(rng, {cout, cin, 3, 3});
    Tensor<double> folded = wv;
    for (std::size_t i = 0; i < folded.size(); ++i) folded.data()[i] += wc.data()[i];
    const auto cdc = nn::cdc_conv2d(Var<double>::constant(x), Var<double>::constant(wv),
                                    Var<double>::constant(wc), Var<double>());
    const auto conv = nn::conv2d(Var<double>::constant(x), Var<double>::constant(folded),
                                 Var<double>());
    for (int b = 0; b < n; ++b)
      for (int o = 0; o < cout; ++o)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            double expect = conv.value().at(b, o, y, xx);
            for (int i = 0; i < cin; ++i) {
              double sum = 0;
              for (int k = 0; k < 9; ++k) sum += wc.at(o, i, k / 3, k % 3);
              expect -= sum * x.at(b, i, y, xx);
            }
            worst_identity =
                std::max(worst_identity, std::abs(expect - cdc.value().at(b, o, y, xx)));
          }

    const Tensor<double> zero(wc.shape(), 0.0);
    const auto vanilla_cdc = nn::cdc_conv2d(Var<double>::constant(x), Var<double>::constant(wv),
                                            Var<double>::constant(zero), Var<double>());
    const auto vanilla = nn::conv2d(Var<double>::constant(x), Var<double>::constant(wv),
                                    Var<double>());
    for (std::size_t i = 0; i < vanilla.value().size(); ++i)
      worst_vanilla = std::max(worst_vanilla, std::abs(vanilla.value().data()[i] -
                                                       vanilla_cdc.value().data()[i]));

    const Tensor<double> flat(x.shape(), rng.uniform());
    const auto flat_out = nn::cdc_conv2d(Var<double>::constant(flat), Var<double>::constant(zero),
                                         Var<double>::constant(wc), Var<double>());
    for (double v : flat_out.value().values()) worst_flat = std::max(worst_flat, std::abs(v));
  }
  const bool pass = worst_identity <= 1e-6 && worst_vanilla <= 1e-6 && worst_flat <= 1e-6;
  return {pass, fmt::format("max |identity err| {:.2e}, |w_c=0 err| {:.2e}, |flat output| {:.2e}"
                            " (tol 1e-6, 100 cases)",
                            worst_identity, worst_vanilla, worst_flat)};
}

// ---- 3. LBP grayscale independence ----

Outcome lbp_independence(Context&) {
  Rng rng(derive_seed(RngSeed{kSeed}, "c3"));
  int mismatches = 0;
  for (int i = 0; i < 20; ++i) {
    RealField f(64, 64, 1);
    // 16-bit levels, as stored on disk, keep distinct values distinct after
    // the float affine map.
    for (float& v : f.values()) v = static_cast<float>(rng.below(65536)) / 65535.0f;
    const ImagePlane img = ImagePlane::from_field(f);
    BinaryMap interior(64, 64);
    for (int y = 4; y < 60; ++y)
      for (int x = 4; x < 60; ++x) interior.set(y, x, rng.uniform() < 0.8);
    const TextureMap ref = texture_intensity_map(img, interior);
    for (int t = 0; t < 5; ++t) {
      const double a = rng.uniform(0.2, 1.0), b = rng.uniform(0.0, 1.0 - a);
      RealField g = f;
      for (float& v : g.values()) v = static_cast<float>(a * v + b);
      const TextureMap out = texture_intensity_map(ImagePlane::from_field(g), interior);
      if (!(out.values == ref.values)) ++mismatches;
    }
  }
  return {mismatches == 0, fmt::format("{} of 100 transformed maps differ bitwise", mismatches)};
}

// ---- 4. metric oracles ----

Outcome metric_oracles(Context&) {
  Rng rng(derive_seed(RngSeed{kSeed}, "c4"));
  int overlap_errors = 0;
  double worst_relation = 0;
  for (int t = 0; t < 1000; ++t) {
    BinaryMap a(8, 8), b(8, 8);
    std::set<int> sa, sb;
    const double pa = rng.uniform(), pb = rng.uniform();
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        if (rng.uniform() < pa) a.set(y, x, true), sa.insert(y * 8 + x);
        if (rng.uniform() < pb) b.set(y, x, true), sb.insert(y * 8 + x);
      }
    std::set<int> inter, uni;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::inserter(inter, inter.begin()));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(uni, uni.begin()));
    const double expect_d =
        uni.empty() ? 1.0 : 2.0 * inter.size() / static_cast<double>(sa.size() + sb.size());
    const double expect_j = uni.empty() ? 1.0 : inter.size() / static_cast<double>(uni.size());
    const double d = dsc(a, b), j = jaccard(a, b);
    if (d != expect_d || j != expect_j) ++overlap_errors;
    worst_relation = std::max(worst_relation, std::abs(d - 2 * j / (1 + j)));
  }
  // Zero against a uniform 0.1: the only float rounding is in 0.1f itself.
  const ImagePlane zero(16, 16, 1, 0.0f), offset(16, 16, 1, 0.1f);
  const double worst_psnr = std::abs(psnr(zero, offset) - 20.0);
  RealField f(32, 32, 1);
  for (float& v : f.values()) v = static_cast<float>(rng.uniform());
  const ImagePlane img = ImagePlane::from_field(f);
  const double self = ssim(img, img);
  const bool pass = overlap_errors == 0 && worst_relation <= 1e-12 && worst_psnr <= 1e-6 &&
                    std::abs(self - 1.0) <= 1e-12;
  return {pass, fmt::format("{} overlap mismatches in 1000 pairs, |DSC-2J/(1+J)| {:.1e}, "
                            "|PSNR-20| {:.1e}, SSIM(a,a) {:.15f}",
                            overlap_errors, worst_relation, worst_psnr, self)};
}

// ---- 5. gradient checks ----

Outcome gradient_checks(Context&) {
  Rng rng(derive_seed(RngSeed{kSeed}, "c5"));
  Tensor<double> target({2, 1, 4, 4});
  for (double& v : target.values()) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
  std::vector<Var<double>> logits{
      Var<double>::parameter(testing::random_tensor(rng, {2, 1, 4, 4}, -3, 3))};
  const auto seg = testing::grad_check(
      logits, [&](const std::vector<Var<double>>& v) { return seg_loss(v[0], target); });

  std::vector<Var<double>> in{
      Var<double>::parameter(testing::random_tensor(rng, {2, 2, 5, 5})),
      Var<double>::parameter(testing::random_tensor(rng, {3, 2, 3, 3})),
      Var<double>::parameter(testing::random_tensor(rng, {3, 2, 3, 3})),
      Var<double>::parameter(testing::random_tensor(rng, {1, 3, 1, 1}))};
  const auto probe = testing::random_tensor(rng, {2, 3, 5, 5});
  const auto cdc = testing::grad_check(in, [&](const std::vector<Var<double>>& v) {
    return nn::weighted_sum(nn::cdc_conv2d(v[0], v[1], v[2], v[3]), probe);
  });
  const bool pass = seg.worst_relative <= 1e-3 && cdc.worst_relative <= 1e-3;
  return {pass, fmt::format("worst relative error seg_loss {:.2e} ({} entries), "
                            "cdc_conv2d {:.2e} ({} entries), tol 1e-3",
                            seg.worst_relative, seg.checked, cdc.worst_relative, cdc.checked)};
}

// ---- 6-10. desk-scale experiments ----

Outcome protection_gap(Context& ctx) {
  const double clean = ctx.dsc("none", "unet", "none");
  const double prot = ctx.dsc("umed", "unet", "none");
  return {clean >= 0.85 && prot <= 0.35,
          fmt::format("clean-trained DSC {:.4f} (need >= 0.85), UMed-trained DSC {:.4f} "
                      "(need <= 0.35)",
                      clean, prot)};
}

Outcome transfer(Context& ctx) {
  const double clean = ctx.dsc("none", "unet_attn_lite", "none");
  const double prot = ctx.dsc("umed", "unet_attn_lite", "none");
  return {clean - prot >= 0.30,
          fmt::format("attention exploiter: clean-trained {:.4f}, UMed-trained {:.4f}, "
                      "gap {:.4f} (need >= 0.30)",
                      clean, prot, clean - prot)};
}

Outcome baseline_ordering(Context& ctx) {
  const double em = ctx.dsc("em", "unet", "none");
  const double um = ctx.dsc("umed", "unet", "none");
  return {em > um, fmt::format("EM-trained DSC {:.4f} vs UMed-trained DSC {:.4f} (need EM > UMed)",
                               em, um)};
}

Outcome defense_direction(Context& ctx) {
  const double none = ctx.dsc("umed", "unet", "none");
  const double jpeg = ctx.dsc("umed", "unet", "jpeg");
  const double adv = ctx.dsc("umed", "unet", "adv");
  return {jpeg > none && adv >= jpeg,
          fmt::format("UMed-trained DSC: undefended {:.4f}, JPEG-60 {:.4f}, adversarial {:.4f} "
                      "(need JPEG > undefended, adversarial >= JPEG)",
                      none, jpeg, adv)};
}

Outcome invisibility_ordering(Context& ctx) {
  const auto& umed = ctx.protected_set("umed");
  const auto& em = ctx.protected_set("em");
  const auto& clean = ctx.data().train;
  std::vector<ImagePlane> c, u, e;
  bool outside_infinite = true;
  const ProtectorSettings settings = desk_protector();
  for (std::size_t i = 0; i < clean.size(); ++i) {
    c.push_back(clean[i].image);
    u.push_back(umed[i].image);
    e.push_back(em[i].image);
    const BinaryMap band = extract_contour_band(clean[i].mask, settings.band);
    const BinaryMap interior = interior_map(clean[i].mask, band);
    BinaryMap outside(band.height(), band.width());
    for (int y = 0; y < band.height(); ++y)
      for (int x = 0; x < band.width(); ++x) outside.set(y, x, !band(y, x) && !interior(y, x));
    if (psnr(clean[i].image, umed[i].image, outside) != kInfinitePsnr) outside_infinite = false;
  }
  const auto su = evaluate_invisibility(c, u);
  const auto se = evaluate_invisibility(c, e);
  return {su.mean_psnr > se.mean_psnr && outside_infinite,
          fmt::format("mean PSNR UMed {:.2f} dB vs EM {:.2f} dB; PSNR outside band and interior "
                      "{} for every UMed sample",
                      su.mean_psnr, se.mean_psnr, outside_infinite ? "infinite" : "NOT infinite")};
}

std::set<int> parse_only(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) != "--only") continue;
    std::stringstream ss(argv[i + 1]);
    for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
  }
  return only;
}

}  // namespace
}  // namespace umed

int main(int argc, char** argv) {
  using namespace umed;
  const std::vector<Criterion> criteria = {
      {1, "budget and region properties", 60, budgets_and_regions},
      {2, "CDC identities", 60, cdc_identities},
      {3, "LBP grayscale independence", 60, lbp_independence},
      {4, "metric oracles", 60, metric_oracles},
      {5, "gradient checks", 300, gradient_checks},
      {6, "end-to-end protection gap", 1800, protection_gap},
      {7, "transfer to attention exploiter", 1800, transfer},
      {8, "baseline ordering", 1800, baseline_ordering},
      {9, "defense direction", 2400, defense_direction},
      {10, "invisibility ordering", 300, invisibility_ordering},
  };
  const std::set<int> only = parse_only(argc, argv);
  Context ctx;
  int failed = 0;
  std::vector<std::string> summary;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (s > c.limit_seconds) {
      o.pass = false;
      o.detail += fmt::format("; runtime {:.0f} s over the {:.0f} s limit", s, c.limit_seconds);
    }
    const std::string line = fmt::format("{} criterion {:>2} {}: {} [{:.1f} s]",
                                         o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail, s);
    fmt::print("{}\n", line);
    std::fflush(stdout);
    summary.push_back(line);
    failed += o.pass ? 0 : 1;
  }
  fmt::print("\nsummary\n");
  for (const auto& l : summary) fmt::print("{}\n", l);
  return failed == 0 ? 0 : 1;
}
