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

#ifndef UMED_AUTOGRAD_H_
#define UMED_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <vector>

#include "umed/tensor.h"

namespace umed::nn {

/// Graph node. `backward` reads `grad` and accumulates into the parents.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  /// Zero-initialized on first use.
  Tensor<T>& grad_buffer() {
    if (grad.empty() && !value.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a node of the dynamic computation graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(Tensor<T> value);
  static Var parameter(Tensor<T> value);

  explicit operator bool() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad() { node_->grad = Tensor<T>(); }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Creates the result node of an op; the closure and parent links are kept
/// only when some parent requires a gradient.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<std::shared_ptr<Node<T>>> parents,
                   std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  for (const auto& p : parents) node->requires_grad |= p->requires_grad;
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward = std::move(backward_fn);
  }
  return Var<T>(std::move(node));
}

/// Reverse sweep from a scalar root; gradients accumulate into every node that
/// requires one (leaves keep theirs until zero_grad).
template <typename T>
void backward(const Var<T>& root);

// Elementwise ops. Binary ops require equal shapes unless stated.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& x, T factor);
template <typename T> Var<T> relu(const Var<T>& x);
template <typename T> Var<T> sigmoid(const Var<T>& x);
template <typename T> Var<T> tanh(const Var<T>& x);

/// x * gate with gate of shape N x 1 x H x W broadcast across channels.
template <typename T> Var<T> mul_channel_broadcast(const Var<T>& x, const Var<T>& gate);
/// x * mask; mask is N x C x H x W or N x 1 x H x W.
template <typename T> Var<T> mul_constant(const Var<T>& x, const Tensor<T>& mask);
/// Elementwise clamp to [lo, hi]; bounds are N x C x H x W or N x 1 x H x W.
/// Gradient passes where lo <= x <= hi.
template <typename T>
Var<T> clip(const Var<T>& x, const Tensor<T>& lo, const Tensor<T>& hi);
template <typename T> Var<T> clip(const Var<T>& x, T lo, T hi);
/// sum(x * weights) as a scalar.
template <typename T> Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights);

}  // namespace umed::nn

#endif  // UMED_AUTOGRAD_H_
