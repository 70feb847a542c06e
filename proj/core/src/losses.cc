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

#include "umed/losses.h"

#include <cmath>

#include <fmt/format.h>

#include "umed/core.h"

namespace umed {

using nn::Node;
using nn::Tensor;
using nn::Var;

namespace {

template <typename T>
void require_target(const Var<T>& logits, const Tensor<T>& target, const char* op) {
  if (logits.value().shape() != target.shape()) {
    throw DimensionError(fmt::format("{}: logits {} vs target {}", op,
                                     nn::shape_string(logits.value().shape()),
                                     nn::shape_string(target.shape())));
  }
}

template <typename T>
T stable_sigmoid(T z) {
  if (z >= 0) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Var<T> bce_with_logits(const Var<T>& logits, const Tensor<T>& target) {
  require_target(logits, target, "bce_with_logits");
  const std::size_t count = target.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const T z = logits.value().data()[i];
    const T y = target.data()[i];
    acc += std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::fabs(z)));
  }
  const T loss = static_cast<T>(acc / static_cast<double>(count));
  return nn::make_result<T>(Tensor<T>::scalar(loss), {logits.ptr()},
                            [target, count](Node<T>& self) {
                              const T g = self.grad.item() / static_cast<T>(count);
                              auto& parent = *self.parents[0];
                              T* gz = parent.grad_buffer().data();
                              for (std::size_t i = 0; i < count; ++i) {
                                gz[i] += g * (stable_sigmoid(parent.value.data()[i]) -
                                              target.data()[i]);
                              }
                            });
}

template <typename T>
Var<T> dice_loss(const Var<T>& logits, const Tensor<T>& target, T smoothing) {
  require_target(logits, target, "dice_loss");
  const std::size_t count = target.size();
  std::vector<T> prob(count);
  double inter = 0.0, psum = 0.0, ysum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    prob[i] = stable_sigmoid(logits.value().data()[i]);
    inter += prob[i] * target.data()[i];
    psum += prob[i];
    ysum += target.data()[i];
  }
  const double num = 2.0 * inter + smoothing;
  const double den = psum + ysum + smoothing;
  const T loss = static_cast<T>(1.0 - num / den);
  return nn::make_result<T>(
      Tensor<T>::scalar(loss), {logits.ptr()},
      [target, prob = std::move(prob), num, den](Node<T>& self) {
        const double g = self.grad.item();
        T* gz = self.parents[0]->grad_buffer().data();
        for (std::size_t i = 0; i < prob.size(); ++i) {
          const double dl_dp = -(2.0 * target.data()[i] * den - num) / (den * den);
          gz[i] += static_cast<T>(g * dl_dp * prob[i] * (1.0 - prob[i]));
        }
      });
}

template <typename T>
Var<T> seg_loss(const Var<T>& logits, const Tensor<T>& target) {
  return nn::add(bce_with_logits(logits, target), dice_loss(logits, target));
}

#define UMED_INSTANTIATE(T)                                                   \
  template Var<T> bce_with_logits<T>(const Var<T>&, const Tensor<T>&);        \
  template Var<T> dice_loss<T>(const Var<T>&, const Tensor<T>&, T);           \
  template Var<T> seg_loss<T>(const Var<T>&, const Tensor<T>&);

UMED_INSTANTIATE(float)
UMED_INSTANTIATE(double)
#undef UMED_INSTANTIATE

}  // namespace umed
