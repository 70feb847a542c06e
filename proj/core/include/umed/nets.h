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

#ifndef UMED_NETS_H_
#define UMED_NETS_H_

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "umed/autograd.h"
#include "umed/core.h"

namespace umed {

enum class Arch {
  kUnet,            // plain U-Net
  kUnetCdcEncoder,  // every encoder convolution is a central difference conv
  kUnetAttnLite,    // additive attention gates on the skip connections
  kUnetNestedLite,  // one level of nested dense skips at full resolution
};

std::string_view arch_name(Arch arch);
/// Accepts "unet", "unet_cdc_encoder", "unet_attn_lite", "unet_nested_lite".
Arch parse_arch(std::string_view name);

struct NetSpec {
  Arch arch = Arch::kUnet;
  int depth = 4;          // resolution levels; the input is pooled depth-1 times
  int base_channels = 16;
  int in_channels = 1;
  int out_channels = 1;
  bool zero_head = false;  // output layer starts at zero (perturbation generators)

  void validate() const;
  /// Spatial sizes must be divisible by this.
  int size_multiple() const { return 1 << (depth - 1); }

  nlohmann::json to_json() const;
  static NetSpec from_json(const nlohmann::json& j);
  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

/// Named trainable arrays of one network, in declaration order.
template <typename T>
struct ModelParams {
  std::vector<std::string> names;
  std::vector<nn::Tensor<T>> tensors;

  const nn::Tensor<T>& at(std::string_view name) const;
  nn::Tensor<T>& at(std::string_view name);
  std::size_t parameter_count() const;

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
    return out;
  }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// One entry of a network's parameter layout.
struct ParamDecl {
  std::string name;
  std::array<int, 4> shape;
  enum class Init { kRelu, kLinear, kZero } init;
  int fan_in;
};

std::vector<ParamDecl> param_layout(const NetSpec& spec);

/// Fan-in scaled uniform init (bound sqrt(6/fan_in) ahead of ReLU, sqrt(3/fan_in)
/// for linear outputs); biases and CDC difference kernels start at zero. Each
/// array draws from its own stream derived from `seed` and its name.
ModelParams<float> init_params(const NetSpec& spec, RngSeed seed);

/// Encoder-decoder network bound to a parameter set. Parameters are graph
/// leaves; forward() builds a fresh graph each call.
template <typename T>
class Network {
 public:
  Network(NetSpec spec, const ModelParams<T>& params);

  const NetSpec& spec() const { return spec_; }
  /// input: N x in_channels x H x W; output: N x out_channels x H x W.
  nn::Var<T> forward(const nn::Var<T>& input) const;

  void set_trainable(bool on);
  void zero_grad();
  std::vector<nn::Var<T>>& parameters() { return leaves_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  ModelParams<T> params() const;

 private:
  const nn::Var<T>& p(const std::string& name) const;
  nn::Var<T> conv_block(const std::string& prefix, nn::Var<T> x, bool cdc) const;
  nn::Var<T> attention_gate(int level, const nn::Var<T>& skip,
                            const nn::Var<T>& gating) const;

  NetSpec spec_;
  std::vector<std::string> names_;
  std::vector<nn::Var<T>> leaves_;
  std::unordered_map<std::string, std::size_t> index_;
  nn::Var<T> none_;
};

/// Inference without gradient tracking.
template <typename T>
nn::Tensor<T> net_forward(const ModelParams<T>& params, const NetSpec& spec,
                          const nn::Tensor<T>& input);

/// Checkpoint container (little-endian):
///   8 bytes  magic "UMEDCKPT"
///   u32      format version (1)
///   u64      header length in bytes
///   header   JSON {"spec": NetSpec, "metadata": {...},
///                  "arrays": [{"name", "shape": [n,c,h,w], "offset", "count"}]}
///   payload  float32 values, offsets relative to the payload start
struct Checkpoint {
  NetSpec spec;
  ModelParams<float> params;
  nlohmann::json metadata = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;
extern template class Network<float>;
extern template class Network<double>;

}  // namespace umed

#endif  // UMED_NETS_H_
