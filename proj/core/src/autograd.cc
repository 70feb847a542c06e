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

#include "umed/autograd.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "umed/core.h"

namespace umed::nn {

template <typename T>
Var<T> Var<T>::constant(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return Var<T>(std::move(node));
}

template <typename T>
Var<T> Var<T>::parameter(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var<T>(std::move(node));
}

template <typename T>
void backward(const Var<T>& root) {
  if (root.value().size() != 1) {
    throw DimensionError("backward() needs a scalar root");
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.ptr().get(), 0);
  seen.insert(root.ptr().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.ptr()->grad_buffer().fill(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(fmt::format("{}: shape {} vs {}", op, shape_string(a.shape()),
                                     shape_string(b.shape())));
  }
}

// True when `m` is N x 1 x H x W against x's N x C x H x W (channel broadcast).
template <typename T>
bool check_broadcast(const Tensor<T>& x, const Tensor<T>& m, const char* op) {
  const auto& xs = x.shape();
  const auto& ms = m.shape();
  if (ms == xs) return false;
  if (ms[0] == xs[0] && ms[1] == 1 && ms[2] == xs[2] && ms[3] == xs[3]) return true;
  throw DimensionError(fmt::format("{}: cannot broadcast {} to {}", op,
                                   shape_string(ms), shape_string(xs)));
}

template <typename T>
std::size_t broadcast_index(const Tensor<T>& x, std::size_t i) {
  const std::size_t plane = x.plane_size();
  const std::size_t per_sample = x.sample_size();
  return (i / per_sample) * plane + (i % plane);
}

template <typename T, typename Fwd, typename Bwd>
Var<T> unary(const Var<T>& x, Fwd fwd, Bwd dfdx_from_y) {
  Tensor<T> out(x.value().shape());
  const T* xs = x.value().data();
  T* ys = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) ys[i] = fwd(xs[i]);
  return make_result<T>(std::move(out), {x.ptr()}, [dfdx_from_y](Node<T>& self) {
    auto& parent = *self.parents[0];
    T* g = parent.grad_buffer().data();
    const T* gy = self.grad.data();
    const T* y = self.value.data();
    const T* xv = parent.value.data();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      g[i] += gy[i] * dfdx_from_y(xv[i], y[i]);
    }
  });
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor<T> out = a.value();
  out += b.value();
  return make_result<T>(std::move(out), {a.ptr(), b.ptr()}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (p->requires_grad) p->grad_buffer() += self.grad;
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor<T> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = a.value().data()[i] * b.value().data()[i];
  }
  return make_result<T>(std::move(out), {a.ptr(), b.ptr()}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const T* g = self.grad.data();
    if (pa.requires_grad) {
      T* ga = pa.grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += g[i] * pb.value.data()[i];
    }
    if (pb.requires_grad) {
      T* gb = pb.grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] += g[i] * pa.value.data()[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  return unary<T>(
      x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T xv, T) { return xv > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> mul_channel_broadcast(const Var<T>& x, const Var<T>& gate) {
  const auto& xs = x.value().shape();
  const auto& gs = gate.value().shape();
  if (gs[0] != xs[0] || gs[1] != 1 || gs[2] != xs[2] || gs[3] != xs[3]) {
    throw DimensionError(fmt::format("mul_channel_broadcast: gate {} vs input {}",
                                     shape_string(gs), shape_string(xs)));
  }
  Tensor<T> out(xs);
  const std::size_t plane = x.value().plane_size();
  for (int n = 0; n < xs[0]; ++n) {
    const T* gv = gate.value().sample(n);
    for (int c = 0; c < xs[1]; ++c) {
      const T* xv = x.value().channel(n, c);
      T* o = out.channel(n, c);
      for (std::size_t i = 0; i < plane; ++i) o[i] = xv[i] * gv[i];
    }
  }
  return make_result<T>(std::move(out), {x.ptr(), gate.ptr()}, [](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pg = *self.parents[1];
    const auto& s = self.value.shape();
    const std::size_t plane = self.value.plane_size();
    for (int n = 0; n < s[0]; ++n) {
      for (int c = 0; c < s[1]; ++c) {
        const T* g = self.grad.channel(n, c);
        if (px.requires_grad) {
          T* gx = px.grad_buffer().channel(n, c);
          const T* gv = pg.value.sample(n);
          for (std::size_t i = 0; i < plane; ++i) gx[i] += g[i] * gv[i];
        }
        if (pg.requires_grad) {
          T* gg = pg.grad_buffer().sample(n);
          const T* xv = px.value.channel(n, c);
          for (std::size_t i = 0; i < plane; ++i) gg[i] += g[i] * xv[i];
        }
      }
    }
  });
}

template <typename T>
Var<T> mul_constant(const Var<T>& x, const Tensor<T>& mask) {
  const bool bcast = check_broadcast(x.value(), mask, "mul_constant");
  Tensor<T> out(x.value().shape());
  std::vector<T> factor(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    factor[i] = mask.data()[bcast ? broadcast_index(x.value(), i) : i];
    out.data()[i] = x.value().data()[i] * factor[i];
  }
  return make_result<T>(std::move(out), {x.ptr()},
                        [factor = std::move(factor)](Node<T>& self) {
                          T* g = self.parents[0]->grad_buffer().data();
                          for (std::size_t i = 0; i < factor.size(); ++i) {
                            g[i] += self.grad.data()[i] * factor[i];
                          }
                        });
}

template <typename T>
Var<T> clip(const Var<T>& x, const Tensor<T>& lo, const Tensor<T>& hi) {
  const bool blo = check_broadcast(x.value(), lo, "clip");
  const bool bhi = check_broadcast(x.value(), hi, "clip");
  Tensor<T> out(x.value().shape());
  std::vector<unsigned char> pass(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T l = lo.data()[blo ? broadcast_index(x.value(), i) : i];
    const T h = hi.data()[bhi ? broadcast_index(x.value(), i) : i];
    const T v = x.value().data()[i];
    out.data()[i] = std::min(h, std::max(l, v));
    pass[i] = v >= l && v <= h;
  }
  return make_result<T>(std::move(out), {x.ptr()},
                        [pass = std::move(pass)](Node<T>& self) {
                          T* g = self.parents[0]->grad_buffer().data();
                          for (std::size_t i = 0; i < pass.size(); ++i) {
                            if (pass[i]) g[i] += self.grad.data()[i];
                          }
                        });
}

template <typename T>
Var<T> clip(const Var<T>& x, T lo, T hi) {
  return unary<T>(
      x, [lo, hi](T v) { return std::min(hi, std::max(lo, v)); },
      [lo, hi](T v, T) { return v >= lo && v <= hi ? T(1) : T(0); });
}

template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights) {
  require_same_shape(x.value(), weights, "weighted_sum");
  T acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += x.value().data()[i] * weights.data()[i];
  }
  return make_result<T>(Tensor<T>::scalar(acc), {x.ptr()},
                        [weights](Node<T>& self) {
                          const T g = self.grad.item();
                          T* gx = self.parents[0]->grad_buffer().data();
                          for (std::size_t i = 0; i < weights.size(); ++i) {
                            gx[i] += g * weights.data()[i];
                          }
                        });
}

#define UMED_INSTANTIATE(T)                                                  \
  template class Var<T>;                                                     \
  template void backward<T>(const Var<T>&);                                  \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                      \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                      \
  template Var<T> scale<T>(const Var<T>&, T);                                \
  template Var<T> relu<T>(const Var<T>&);                                    \
  template Var<T> sigmoid<T>(const Var<T>&);                                 \
  template Var<T> tanh<T>(const Var<T>&);                                    \
  template Var<T> mul_channel_broadcast<T>(const Var<T>&, const Var<T>&);    \
  template Var<T> mul_constant<T>(const Var<T>&, const Tensor<T>&);          \
  template Var<T> clip<T>(const Var<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Var<T> clip<T>(const Var<T>&, T, T);                              \
  template Var<T> weighted_sum<T>(const Var<T>&, const Tensor<T>&);

UMED_INSTANTIATE(float)
UMED_INSTANTIATE(double)
#undef UMED_INSTANTIATE

}  // namespace umed::nn
