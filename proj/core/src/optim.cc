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

#include "umed/optim.h"

#include <cmath>

namespace umed {

template <typename T>
Adam<T>::Adam(std::vector<nn::Var<T>>& params, Options options)
    : params_(&params), opt_(options) {
  for (const auto& p : params) {
    m_.emplace_back(p.value().size(), T(0));
    v_.emplace_back(p.value().size(), T(0));
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  const T step_size = static_cast<T>(opt_.lr / bc1);
  const T b1 = static_cast<T>(opt_.beta1), b2 = static_cast<T>(opt_.beta2);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(opt_.eps);
  for (std::size_t i = 0; i < params_->size(); ++i) {
    auto& p = (*params_)[i];
    const auto& g = p.grad();
    T* w = p.mutable_value().data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    const std::size_t n = p.value().size();
    for (std::size_t j = 0; j < n; ++j) {
      const T gj = g.empty() ? T(0) : g.data()[j];
      m[j] = b1 * m[j] + (T(1) - b1) * gj;
      v[j] = b2 * v[j] + (T(1) - b2) * gj * gj;
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + eps);
    }
  }
}

template <typename T>
double grad_norm(const std::vector<nn::Var<T>>& params) {
  double acc = 0.0;
  for (const auto& p : params) {
    if (!p.ptr() || p.grad().empty()) continue;
    for (T g : p.grad().values()) acc += static_cast<double>(g) * g;
  }
  return std::sqrt(acc);
}

template <typename T>
double clip_grad_norm(std::vector<nn::Var<T>>& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (p.grad().empty()) continue;
      auto& g = p.ptr()->grad;
      for (T& v : g.values()) v *= factor;
    }
  }
  return norm;
}

template class Adam<float>;
template class Adam<double>;
template double clip_grad_norm<float>(std::vector<nn::Var<float>>&, double);
template double clip_grad_norm<double>(std::vector<nn::Var<double>>&, double);
template double grad_norm<float>(const std::vector<nn::Var<float>>&);
template double grad_norm<double>(const std::vector<nn::Var<double>>&);

}  // namespace umed
