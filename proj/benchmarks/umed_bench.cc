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

#include <benchmark/benchmark.h>

#include "umed/eval.h"
#include "umed/layers.h"
#include "umed/losses.h"
#include "umed/nets.h"
#include "umed/optim.h"
#include "umed/texture.h"

namespace umed {
namespace {

using nn::Tensor;
using nn::Var;

Tensor<float> random_tensor(Tensor<float>::Shape shape, std::uint64_t seed) {
  Rng rng(RngSeed{seed});
  Tensor<float> t(shape);
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = Var<float>::constant(random_tensor({8, c, 64, 64}, 1));
  const auto w = Var<float>::constant(random_tensor({c, c, 3, 3}, 2));
  for (auto _ : state) {
    auto y = nn::conv2d(x, w, Var<float>());
    benchmark::DoNotOptimize(y.value().data());
  }
  state.SetItemsProcessed(state.iterations() * 8LL * 64 * 64 * c * c * 9);
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_CdcConv2dForwardBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = random_tensor({8, c, 64, 64}, 1);
  const auto wv = random_tensor({c, c, 3, 3}, 2);
  const auto wc = random_tensor({c, c, 3, 3}, 3);
  const Tensor<float> probe = random_tensor({8, c, 64, 64}, 4);
  for (auto _ : state) {
    auto xv = Var<float>::parameter(x);
    auto y = nn::cdc_conv2d(xv, Var<float>::parameter(wv), Var<float>::parameter(wc),
                            Var<float>());
    nn::backward(nn::weighted_sum(y, probe));
    benchmark::DoNotOptimize(xv.grad().data());
  }
}
BENCHMARK(BM_CdcConv2dForwardBackward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

// One optimizer step of a segmentation network on a 64x64 batch of 16.
void BM_UnetTrainStep(benchmark::State& state) {
  NetSpec spec;
  spec.arch = static_cast<Arch>(state.range(0));
  spec.depth = 3;
  spec.base_channels = 8;
  Network<float> net(spec, init_params(spec, RngSeed{1}));
  Adam<float> opt(net.parameters(), {.lr = 1e-3});
  const auto x = random_tensor({16, 1, 64, 64}, 5);
  Tensor<float> y(x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = x.data()[i] > 0 ? 1.0f : 0.0f;
  for (auto _ : state) {
    net.zero_grad();
    auto loss = seg_loss(net.forward(Var<float>::constant(x)), y);
    nn::backward(loss);
    opt.step();
    benchmark::DoNotOptimize(loss.value().item());
  }
  state.SetLabel(std::string(arch_name(spec.arch)));
}
BENCHMARK(BM_UnetTrainStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_TextureMap(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(RngSeed{3});
  RealField f(n, n, 1);
  for (float& v : f.values()) v = static_cast<float>(rng.uniform());
  const ImagePlane img = ImagePlane::from_field(f);
  const BinaryMap interior(n, n, true);
  for (auto _ : state) {
    auto t = texture_intensity_map(img, interior);
    benchmark::DoNotOptimize(t.values.data().data());
  }
}
BENCHMARK(BM_TextureMap)->Arg(64)->Arg(256);

void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(RngSeed{4});
  RealField a(n, n, 1), b(n, n, 1);
  for (float& v : a.values()) v = static_cast<float>(rng.uniform());
  for (float& v : b.values()) v = static_cast<float>(rng.uniform());
  const ImagePlane ia = ImagePlane::from_field(a), ib = ImagePlane::from_field(b);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(ia, ib));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

}  // namespace
}  // namespace umed

BENCHMARK_MAIN();
