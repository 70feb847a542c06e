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

#include "umed/nets.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "umed/layers.h"

namespace umed {

using nn::Tensor;
using nn::Var;

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::kUnet:
      return "unet";
    case Arch::kUnetCdcEncoder:
      return "unet_cdc_encoder";
    case Arch::kUnetAttnLite:
      return "unet_attn_lite";
    case Arch::kUnetNestedLite:
      return "unet_nested_lite";
  }
  return "unknown";
}

Arch parse_arch(std::string_view name) {
  for (Arch a : {Arch::kUnet, Arch::kUnetCdcEncoder, Arch::kUnetAttnLite,
                 Arch::kUnetNestedLite}) {
    if (arch_name(a) == name) return a;
  }
  throw ConfigError(fmt::format("unknown architecture '{}'", name));
}

void NetSpec::validate() const {
  if (depth < 2 || depth > 8) {
    throw ConfigError(fmt::format("depth must be in [2, 8], got {}", depth));
  }
  if (base_channels < 1 || in_channels < 1 || out_channels < 1) {
    throw ConfigError("channel counts must be positive");
  }
}

nlohmann::json NetSpec::to_json() const {
  return {{"arch", std::string(arch_name(arch))},
          {"depth", depth},
          {"base_channels", base_channels},
          {"in_channels", in_channels},
          {"out_channels", out_channels},
          {"zero_head", zero_head}};
}

NetSpec NetSpec::from_json(const nlohmann::json& j) {
  NetSpec spec;
  spec.arch = parse_arch(j.at("arch").get<std::string>());
  spec.depth = j.at("depth").get<int>();
  spec.base_channels = j.at("base_channels").get<int>();
  spec.in_channels = j.at("in_channels").get<int>();
  spec.out_channels = j.at("out_channels").get<int>();
  spec.zero_head = j.value("zero_head", false);
  spec.validate();
  return spec;
}

template <typename T>
const Tensor<T>& ModelParams<T>::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw ConfigError(fmt::format("no parameter named '{}'", name));
}

template <typename T>
Tensor<T>& ModelParams<T>::at(std::string_view name) {
  return const_cast<Tensor<T>&>(std::as_const(*this).at(name));
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

namespace {

void declare_conv(std::vector<ParamDecl>& out, const std::string& name, int cin,
                  int cout, int k, ParamDecl::Init init, bool cdc) {
  const int fan_in = cin * k * k;
  if (cdc) {
    out.push_back({name + ".wv", {cout, cin, k, k}, init, fan_in});
    out.push_back({name + ".wc", {cout, cin, k, k}, ParamDecl::Init::kZero, fan_in});
  } else {
    out.push_back({name + ".w", {cout, cin, k, k}, init, fan_in});
  }
  out.push_back({name + ".b", {1, cout, 1, 1}, ParamDecl::Init::kZero, fan_in});
}

void declare_block(std::vector<ParamDecl>& out, const std::string& prefix, int cin,
                   int cout, bool cdc) {
  declare_conv(out, prefix + ".conv1", cin, cout, 3, ParamDecl::Init::kRelu, cdc);
  declare_conv(out, prefix + ".conv2", cout, cout, 3, ParamDecl::Init::kRelu, cdc);
}

void declare_up(std::vector<ParamDecl>& out, const std::string& name, int cin,
                int cout) {
  out.push_back({name + ".w", {cin, cout, 2, 2}, ParamDecl::Init::kLinear, cin});
  out.push_back({name + ".b", {1, cout, 1, 1}, ParamDecl::Init::kZero, cin});
}

int gate_width(int channels) { return std::max(1, channels / 2); }

}  // namespace

std::vector<ParamDecl> param_layout(const NetSpec& spec) {
  spec.validate();
  std::vector<ParamDecl> out;
  auto ch = [&](int level) { return spec.base_channels << level; };
  const bool cdc = spec.arch == Arch::kUnetCdcEncoder;
  for (int l = 0; l < spec.depth; ++l) {
    declare_block(out, fmt::format("enc{}", l), l == 0 ? spec.in_channels : ch(l - 1),
                  ch(l), cdc);
  }
  for (int l = spec.depth - 2; l >= 0; --l) {
    declare_up(out, fmt::format("up{}", l), ch(l + 1), ch(l));
    int dec_in = 2 * ch(l);
    if (spec.arch == Arch::kUnetAttnLite) {
      const std::string a = fmt::format("att{}", l);
      const int f = gate_width(ch(l));
      out.push_back({a + ".wx", {f, ch(l), 1, 1}, ParamDecl::Init::kRelu, ch(l)});
      out.push_back({a + ".wg", {f, ch(l), 1, 1}, ParamDecl::Init::kRelu, ch(l)});
      out.push_back({a + ".b", {1, f, 1, 1}, ParamDecl::Init::kZero, ch(l)});
      out.push_back({a + ".psi.w", {1, f, 1, 1}, ParamDecl::Init::kLinear, f});
      out.push_back({a + ".psi.b", {1, 1, 1, 1}, ParamDecl::Init::kZero, f});
    }
    if (spec.arch == Arch::kUnetNestedLite && l == 0) {
      declare_up(out, "nest0.up", ch(1), ch(0));
      declare_block(out, "nest0", 2 * ch(0), ch(0), false);
      dec_in = 3 * ch(0);
    }
    declare_block(out, fmt::format("dec{}", l), dec_in, ch(l), false);
  }
  declare_conv(out, "head", ch(0), spec.out_channels, 1,
               spec.zero_head ? ParamDecl::Init::kZero : ParamDecl::Init::kLinear,
               false);
  return out;
}

ModelParams<float> init_params(const NetSpec& spec, RngSeed seed) {
  ModelParams<float> params;
  for (const auto& decl : param_layout(spec)) {
    Tensor<float> t(decl.shape);
    if (decl.init != ParamDecl::Init::kZero) {
      const double gain = decl.init == ParamDecl::Init::kRelu ? 6.0 : 3.0;
      const double bound = std::sqrt(gain / decl.fan_in);
      Rng rng(derive_seed(seed, decl.name));
      for (float& v : t.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    params.names.push_back(decl.name);
    params.tensors.push_back(std::move(t));
  }
  return params;
}

template <typename T>
Network<T>::Network(NetSpec spec, const ModelParams<T>& params) : spec_(spec) {
  const auto layout = param_layout(spec_);
  if (params.names.size() != layout.size()) {
    throw DimensionError(fmt::format("{} expects {} parameter arrays, got {}",
                                     arch_name(spec_.arch), layout.size(),
                                     params.names.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& t = params.at(layout[i].name);
    if (t.shape() != layout[i].shape) {
      throw DimensionError(fmt::format("parameter {}: expected {}, got {}",
                                       layout[i].name, nn::shape_string(layout[i].shape),
                                       nn::shape_string(t.shape())));
    }
    names_.push_back(layout[i].name);
    leaves_.push_back(Var<T>::parameter(t));
    index_.emplace(layout[i].name, i);
  }
}

template <typename T>
const Var<T>& Network<T>::p(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError(fmt::format("missing parameter {}", name));
  return leaves_[it->second];
}

template <typename T>
Var<T> Network<T>::conv_block(const std::string& prefix, Var<T> x, bool cdc) const {
  for (const char* conv : {".conv1", ".conv2"}) {
    const std::string name = prefix + conv;
    if (cdc) {
      x = nn::cdc_conv2d(x, p(name + ".wv"), p(name + ".wc"), p(name + ".b"));
    } else {
      x = nn::conv2d(x, p(name + ".w"), p(name + ".b"));
    }
    x = nn::relu(x);
  }
  return x;
}

template <typename T>
Var<T> Network<T>::attention_gate(int level, const Var<T>& skip,
                                  const Var<T>& gating) const {
  const std::string a = fmt::format("att{}", level);
  auto q = nn::add(nn::conv2d(skip, p(a + ".wx"), p(a + ".b")),
                   nn::conv2d(gating, p(a + ".wg"), none_));
  auto psi = nn::sigmoid(nn::conv2d(nn::relu(q), p(a + ".psi.w"), p(a + ".psi.b")));
  return nn::mul_channel_broadcast(skip, psi);
}

template <typename T>
Var<T> Network<T>::forward(const Var<T>& input) const {
  const auto& s = input.value().shape();
  if (s[1] != spec_.in_channels) {
    throw DimensionError(fmt::format("{} expects {} input channels, got {}",
                                     arch_name(spec_.arch), spec_.in_channels, s[1]));
  }
  const int m = spec_.size_multiple();
  if (s[2] % m != 0 || s[3] % m != 0) {
    throw DimensionError(fmt::format(
        "input {}x{} not divisible by {} (depth {})", s[2], s[3], m, spec_.depth));
  }
  const bool cdc = spec_.arch == Arch::kUnetCdcEncoder;
  std::vector<Var<T>> enc;
  Var<T> x = input;
  for (int l = 0; l < spec_.depth; ++l) {
    if (l > 0) x = nn::max_pool2x2(x);
    x = conv_block(fmt::format("enc{}", l), x, cdc);
    enc.push_back(x);
  }
  for (int l = spec_.depth - 2; l >= 0; --l) {
    const std::string up = fmt::format("up{}", l);
    Var<T> u = nn::conv_transpose2x2(x, p(up + ".w"), p(up + ".b"));
    Var<T> skip = enc[l];
    if (spec_.arch == Arch::kUnetAttnLite) skip = attention_gate(l, skip, u);
    std::vector<Var<T>> parts{skip};
    if (spec_.arch == Arch::kUnetNestedLite && l == 0) {
      Var<T> nu = nn::conv_transpose2x2(enc[1], p("nest0.up.w"), p("nest0.up.b"));
      parts.push_back(conv_block("nest0", nn::concat_channels<T>({enc[0], nu}), false));
    }
    parts.push_back(u);
    x = conv_block(fmt::format("dec{}", l), nn::concat_channels(parts), false);
  }
  return nn::conv2d(x, p("head.w"), p("head.b"));
}

template <typename T>
void Network<T>::set_trainable(bool on) {
  for (auto& v : leaves_) v.set_requires_grad(on);
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& v : leaves_) v.zero_grad();
}

template <typename T>
ModelParams<T> Network<T>::params() const {
  ModelParams<T> out;
  out.names = names_;
  for (const auto& v : leaves_) out.tensors.push_back(v.value());
  return out;
}

template <typename T>
Tensor<T> net_forward(const ModelParams<T>& params, const NetSpec& spec,
                      const Tensor<T>& input) {
  Network<T> net(spec, params);
  net.set_trainable(false);
  return net.forward(Var<T>::constant(input)).value();
}

namespace {

constexpr char kMagic[8] = {'U', 'M', 'E', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
U byteswap(U v) {
  U out{};
  auto* src = reinterpret_cast<const unsigned char*>(&v);
  auto* dst = reinterpret_cast<unsigned char*>(&out);
  for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
  return out;
}

template <typename U>
void write_le(std::ostream& os, U v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename U>
U read_le(std::istream& is) {
  U v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["spec"] = ckpt.spec.to_json();
  header["metadata"] = ckpt.metadata;
  header["arrays"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < ckpt.params.names.size(); ++i) {
    const auto& t = ckpt.params.tensors[i];
    header["arrays"].push_back({{"name", ckpt.params.names[i]},
                                {"shape", t.shape()},
                                {"offset", offset},
                                {"count", t.size()}});
    offset += t.size() * sizeof(float);
  }
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  os.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : ckpt.params.tensors) {
    for (float v : t.values()) write_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v));
  }
  if (!os) throw IoError(fmt::format("write failed for {}", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(fmt::format("cannot open checkpoint {}", path.string()));
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(fmt::format("{} is not a checkpoint", path.string()));
  }
  if (read_le<std::uint32_t>(is) != kVersion) {
    throw IoError(fmt::format("{}: unsupported checkpoint version", path.string()));
  }
  const auto len = read_le<std::uint64_t>(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw IoError(fmt::format("{}: truncated header", path.string()));
  const auto header = nlohmann::json::parse(text);

  Checkpoint ckpt;
  ckpt.spec = NetSpec::from_json(header.at("spec"));
  ckpt.metadata = header.value("metadata", nlohmann::json::object());
  const auto payload_start = is.tellg();
  for (const auto& entry : header.at("arrays")) {
    const auto shape = entry.at("shape").get<std::array<int, 4>>();
    Tensor<float> t(shape);
    if (entry.at("count").get<std::size_t>() != t.size()) {
      throw IoError(fmt::format("{}: count/shape mismatch for {}", path.string(),
                                entry.at("name").get<std::string>()));
    }
    is.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    for (float& v : t.values()) v = std::bit_cast<float>(read_le<std::uint32_t>(is));
    if (!is) throw IoError(fmt::format("{}: truncated payload", path.string()));
    ckpt.params.names.push_back(entry.at("name").get<std::string>());
    ckpt.params.tensors.push_back(std::move(t));
  }
  Network<float> check(ckpt.spec, ckpt.params);  // validates shapes
  return ckpt;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template class Network<float>;
template class Network<double>;
template Tensor<float> net_forward<float>(const ModelParams<float>&, const NetSpec&,
                                          const Tensor<float>&);
template Tensor<double> net_forward<double>(const ModelParams<double>&, const NetSpec&,
                                            const Tensor<double>&);

}  // namespace umed
