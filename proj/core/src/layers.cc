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

#include "umed/layers.h"

#include <algorithm>
#include <cstring>

#include <Eigen/Core>
#include <fmt/format.h>

#include "umed/core.h"

namespace umed::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// cols has (C*k*k) rows and (H*W) columns. Out-of-range taps read the nearest
// edge pixel (replicate padding).
template <typename T>
void im2col(const T* x, int channels, int h, int w, int k, T* cols) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    const T* plane = x + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + ((c * k + ky) * k + kx) * hw;
        const int dx = kx - pad;
        const int x0 = std::clamp(-dx, 0, w);
        const int x1 = std::clamp(w - dx, x0, w);
        for (int y = 0; y < h; ++y) {
          T* dst = row + static_cast<std::size_t>(y) * w;
          const int sy = std::clamp(y + ky - pad, 0, h - 1);
          const T* src = plane + static_cast<std::size_t>(sy) * w;
          std::fill(dst, dst + x0, src[0]);
          if (x1 > x0) std::memcpy(dst + x0, src + x0 + dx, sizeof(T) * (x1 - x0));
          std::fill(dst + x1, dst + w, src[w - 1]);
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates into dx.
template <typename T>
void col2im_add(const T* cols, int channels, int h, int w, int k, T* dx) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    T* plane = dx + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + ((c * k + ky) * k + kx) * hw;
        const int dxo = kx - pad;
        const int x0 = std::clamp(-dxo, 0, w);
        const int x1 = std::clamp(w - dxo, x0, w);
        for (int y = 0; y < h; ++y) {
          const int sy = std::clamp(y + ky - pad, 0, h - 1);
          const T* src = row + static_cast<std::size_t>(y) * w;
          T* dst = plane + static_cast<std::size_t>(sy) * w;
          for (int xx = 0; xx < x0; ++xx) dst[0] += src[xx];
          for (int xx = x0; xx < x1; ++xx) dst[xx + dxo] += src[xx];
          for (int xx = x1; xx < w; ++xx) dst[w - 1] += src[xx];
        }
      }
    }
  }
}

template <typename T>
void check_conv_shapes(const Tensor<T>& x, const Tensor<T>& w, const Var<T>& bias,
                       const char* op) {
  const auto& ws = w.shape();
  if (ws[1] != x.c() || ws[2] != ws[3] || ws[2] % 2 == 0) {
    throw DimensionError(fmt::format("{}: weight {} incompatible with input {}", op,
                                     shape_string(ws), shape_string(x.shape())));
  }
  if (bias && bias.value().size() != static_cast<std::size_t>(ws[0])) {
    throw DimensionError(fmt::format("{}: bias size {} for {} outputs", op,
                                     bias.value().size(), ws[0]));
  }
}

template <typename T>
void add_bias(T* out, const Var<T>& bias, int channels, std::size_t hw) {
  if (!bias) return;
  for (int c = 0; c < channels; ++c) {
    const T b = bias.value().data()[c];
    T* row = out + c * hw;
    for (std::size_t i = 0; i < hw; ++i) row[i] += b;
  }
}

template <typename T>
void accumulate_bias_grad(Node<T>& bias, const Tensor<T>& grad) {
  T* gb = bias.grad_buffer().data();
  const std::size_t hw = grad.plane_size();
  for (int n = 0; n < grad.n(); ++n) {
    for (int c = 0; c < grad.c(); ++c) {
      const T* g = grad.channel(n, c);
      T acc = 0;
      for (std::size_t i = 0; i < hw; ++i) acc += g[i];
      gb[c] += acc;
    }
  }
}

template <typename T>
std::vector<std::shared_ptr<Node<T>>> parents_of(std::initializer_list<const Var<T>*> vars) {
  std::vector<std::shared_ptr<Node<T>>> out;
  for (const Var<T>* v : vars) {
    if (*v) out.push_back(v->ptr());
  }
  return out;
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  check_conv_shapes(x.value(), weight.value(), bias, "conv2d");
  const int n = x.value().n(), cin = x.value().c(), h = x.value().h(), w = x.value().w();
  const int cout = weight.value().shape()[0];
  const int k = weight.value().shape()[2];
  const int kdim = cin * k * k;
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  Tensor<T> out({n, cout, h, w});
  std::vector<T> cols(k == 1 ? 0 : static_cast<std::size_t>(kdim) * hw);
  ConstMatMap<T> wm(weight.value().data(), cout, kdim);
  for (int s = 0; s < n; ++s) {
    const T* src = x.value().sample(s);
    if (k != 1) {
      im2col(src, cin, h, w, k, cols.data());
      src = cols.data();
    }
    MatMap<T> om(out.sample(s), cout, hw);
    om.noalias() = wm * ConstMatMap<T>(src, kdim, hw);
    add_bias(out.sample(s), bias, cout, hw);
  }

  const bool has_bias = static_cast<bool>(bias);
  return make_result<T>(
      std::move(out), parents_of<T>({&x, &weight, &bias}),
      [n, cin, h, w, cout, k, kdim, hw, has_bias](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        std::vector<T> cols(k == 1 ? 0 : static_cast<std::size_t>(kdim) * hw);
        std::vector<T> dcols(k == 1 ? 0 : static_cast<std::size_t>(kdim) * hw);
        ConstMatMap<T> wm(pw.value.data(), cout, kdim);
        for (int s = 0; s < n; ++s) {
          ConstMatMap<T> gy(self.grad.sample(s), cout, hw);
          if (pw.requires_grad) {
            const T* src = px.value.sample(s);
            if (k != 1) {
              im2col(src, cin, h, w, k, cols.data());
              src = cols.data();
            }
            MatMap<T> gw(pw.grad_buffer().data(), cout, kdim);
            gw.noalias() += gy * ConstMatMap<T>(src, kdim, hw).transpose();
          }
          if (px.requires_grad) {
            T* gx = px.grad_buffer().sample(s);
            if (k == 1) {
              MatMap<T>(gx, cin, hw).noalias() += wm.transpose() * gy;
            } else {
              MatMap<T>(dcols.data(), kdim, hw).noalias() = wm.transpose() * gy;
              col2im_add(dcols.data(), cin, h, w, k, gx);
            }
          }
        }
        if (has_bias && self.parents[2]->requires_grad) {
          accumulate_bias_grad(*self.parents[2], self.grad);
        }
      });
}

namespace {

// diff rows: cols(c, k, p) - x(c, p).
template <typename T>
void central_differences(const T* cols, const T* x, int channels, std::size_t hw,
                         T* diff) {
  for (int c = 0; c < channels; ++c) {
    const T* centre = x + c * hw;
    for (int k = 0; k < 9; ++k) {
      const T* row = cols + (c * 9 + k) * hw;
      T* dst = diff + (c * 9 + k) * hw;
      for (std::size_t i = 0; i < hw; ++i) dst[i] = row[i] - centre[i];
    }
  }
}

}  // namespace

template <typename T>
Var<T> cdc_conv2d(const Var<T>& x, const Var<T>& weight_vanilla,
                  const Var<T>& weight_diff, const Var<T>& bias) {
  check_conv_shapes(x.value(), weight_vanilla.value(), bias, "cdc_conv2d");
  if (weight_vanilla.value().shape() != weight_diff.value().shape() ||
      weight_vanilla.value().shape()[2] != 3) {
    throw DimensionError(fmt::format("cdc_conv2d: kernels {} and {} must both be 3x3",
                                     shape_string(weight_vanilla.value().shape()),
                                     shape_string(weight_diff.value().shape())));
  }
  const int n = x.value().n(), cin = x.value().c(), h = x.value().h(), w = x.value().w();
  if (h < 3 || w < 3) {
    throw DimensionError("cdc_conv2d: input must be at least 3x3");
  }
  const int cout = weight_vanilla.value().shape()[0];
  const int kdim = cin * 9;
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  Tensor<T> out({n, cout, h, w});
  std::vector<T> cols(static_cast<std::size_t>(kdim) * hw);
  std::vector<T> diff(cols.size());
  ConstMatMap<T> wv(weight_vanilla.value().data(), cout, kdim);
  ConstMatMap<T> wc(weight_diff.value().data(), cout, kdim);
  for (int s = 0; s < n; ++s) {
    im2col(x.value().sample(s), cin, h, w, 3, cols.data());
    central_differences(cols.data(), x.value().sample(s), cin, hw, diff.data());
    MatMap<T> om(out.sample(s), cout, hw);
    om.noalias() = wv * ConstMatMap<T>(cols.data(), kdim, hw);
    om.noalias() += wc * ConstMatMap<T>(diff.data(), kdim, hw);
    add_bias(out.sample(s), bias, cout, hw);
  }

  const bool has_bias = static_cast<bool>(bias);
  return make_result<T>(
      std::move(out), parents_of<T>({&x, &weight_vanilla, &weight_diff, &bias}),
      [n, cin, h, w, cout, kdim, hw, has_bias](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pv = *self.parents[1];
        auto& pc = *self.parents[2];
        std::vector<T> cols(static_cast<std::size_t>(kdim) * hw);
        std::vector<T> diff(cols.size());
        std::vector<T> dcols(cols.size());
        std::vector<T> ddiff(cols.size());
        ConstMatMap<T> wv(pv.value.data(), cout, kdim);
        ConstMatMap<T> wc(pc.value.data(), cout, kdim);
        for (int s = 0; s < n; ++s) {
          ConstMatMap<T> gy(self.grad.sample(s), cout, hw);
          if (pv.requires_grad || pc.requires_grad) {
            im2col(px.value.sample(s), cin, h, w, 3, cols.data());
          }
          if (pv.requires_grad) {
            MatMap<T> gw(pv.grad_buffer().data(), cout, kdim);
            gw.noalias() += gy * ConstMatMap<T>(cols.data(), kdim, hw).transpose();
          }
          if (pc.requires_grad) {
            central_differences(cols.data(), px.value.sample(s), cin, hw, diff.data());
            MatMap<T> gw(pc.grad_buffer().data(), cout, kdim);
            gw.noalias() += gy * ConstMatMap<T>(diff.data(), kdim, hw).transpose();
          }
          if (px.requires_grad) {
            MatMap<T> dc(dcols.data(), kdim, hw);
            MatMap<T> dd(ddiff.data(), kdim, hw);
            dc.noalias() = wv.transpose() * gy;
            dd.noalias() = wc.transpose() * gy;
            dc += dd;
            T* gx = px.grad_buffer().sample(s);
            col2im_add(dcols.data(), cin, h, w, 3, gx);
            // The centre term -x(r) appears once per kernel tap.
            for (int c = 0; c < cin; ++c) {
              T* g = gx + c * hw;
              for (int k = 0; k < 9; ++k) {
                const T* row = ddiff.data() + (c * 9 + k) * hw;
                for (std::size_t i = 0; i < hw; ++i) g[i] -= row[i];
              }
            }
          }
        }
        if (has_bias && self.parents[3]->requires_grad) {
          accumulate_bias_grad(*self.parents[3], self.grad);
        }
      });
}

template <typename T>
Var<T> conv_transpose2x2(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const auto& ws = weight.value().shape();
  if (ws[0] != x.value().c() || ws[2] != 2 || ws[3] != 2) {
    throw DimensionError(fmt::format("conv_transpose2x2: weight {} vs input {}",
                                     shape_string(ws), shape_string(x.value().shape())));
  }
  const int n = x.value().n(), cin = x.value().c(), h = x.value().h(), w = x.value().w();
  const int cout = ws[1];
  if (bias && bias.value().size() != static_cast<std::size_t>(cout)) {
    throw DimensionError("conv_transpose2x2: bias size mismatch");
  }
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const int oh = 2 * h, ow = 2 * w;

  Tensor<T> out({n, cout, oh, ow});
  std::vector<T> tmp(static_cast<std::size_t>(cout) * 4 * hw);
  ConstMatMap<T> wm(weight.value().data(), cin, cout * 4);
  for (int s = 0; s < n; ++s) {
    MatMap<T>(tmp.data(), cout * 4, hw).noalias() =
        wm.transpose() * ConstMatMap<T>(x.value().sample(s), cin, hw);
    for (int co = 0; co < cout; ++co) {
      const T b = bias ? bias.value().data()[co] : T(0);
      T* o = out.channel(s, co);
      for (int a = 0; a < 2; ++a) {
        for (int bb = 0; bb < 2; ++bb) {
          const T* row = tmp.data() + (co * 4 + a * 2 + bb) * hw;
          for (int y = 0; y < h; ++y) {
            T* orow = o + static_cast<std::size_t>(2 * y + a) * ow + bb;
            const T* irow = row + static_cast<std::size_t>(y) * w;
            for (int xx = 0; xx < w; ++xx) orow[2 * xx] = irow[xx] + b;
          }
        }
      }
    }
  }

  const bool has_bias = static_cast<bool>(bias);
  return make_result<T>(
      std::move(out), parents_of<T>({&x, &weight, &bias}),
      [n, cin, h, w, cout, hw, ow, has_bias](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        std::vector<T> dtmp(static_cast<std::size_t>(cout) * 4 * hw);
        ConstMatMap<T> wm(pw.value.data(), cin, cout * 4);
        for (int s = 0; s < n; ++s) {
          for (int co = 0; co < cout; ++co) {
            const T* g = self.grad.channel(s, co);
            for (int a = 0; a < 2; ++a) {
              for (int bb = 0; bb < 2; ++bb) {
                T* row = dtmp.data() + (co * 4 + a * 2 + bb) * hw;
                for (int y = 0; y < h; ++y) {
                  const T* grow = g + static_cast<std::size_t>(2 * y + a) * ow + bb;
                  T* drow = row + static_cast<std::size_t>(y) * w;
                  for (int xx = 0; xx < w; ++xx) drow[xx] = grow[2 * xx];
                }
              }
            }
          }
          ConstMatMap<T> dt(dtmp.data(), cout * 4, hw);
          if (pw.requires_grad) {
            MatMap<T>(pw.grad_buffer().data(), cin, cout * 4).noalias() +=
                ConstMatMap<T>(px.value.sample(s), cin, hw) * dt.transpose();
          }
          if (px.requires_grad) {
            MatMap<T>(px.grad_buffer().sample(s), cin, hw).noalias() += wm * dt;
          }
        }
        if (has_bias && self.parents[2]->requires_grad) {
          accumulate_bias_grad(*self.parents[2], self.grad);
        }
      });
}

template <typename T>
Var<T> max_pool2x2(const Var<T>& x) {
  const int n = x.value().n(), c = x.value().c(), h = x.value().h(), w = x.value().w();
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError(
        fmt::format("max_pool2x2 needs even spatial size, got {}x{}", h, w));
  }
  const int oh = h / 2, ow = w / 2;
  Tensor<T> out({n, c, oh, ow});
  std::vector<std::uint32_t> argmax(out.size());
  std::size_t idx = 0;
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      const T* in = x.value().channel(s, ch);
      const std::size_t base = x.value().channel(s, ch) - x.value().data();
      for (int y = 0; y < oh; ++y) {
        for (int xx = 0; xx < ow; ++xx, ++idx) {
          std::size_t best = static_cast<std::size_t>(2 * y) * w + 2 * xx;
          for (std::size_t cand : {best + 1, best + w, best + w + 1}) {
            if (in[cand] > in[best]) best = cand;
          }
          out.data()[idx] = in[best];
          argmax[idx] = static_cast<std::uint32_t>(base + best);
        }
      }
    }
  }
  return make_result<T>(std::move(out), {x.ptr()},
                        [argmax = std::move(argmax)](Node<T>& self) {
                          T* g = self.parents[0]->grad_buffer().data();
                          for (std::size_t i = 0; i < argmax.size(); ++i) {
                            g[argmax[i]] += self.grad.data()[i];
                          }
                        });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  const auto& s0 = parts[0].value().shape();
  int channels = 0;
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (const auto& p : parts) {
    const auto& s = p.value().shape();
    if (s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3]) {
      throw DimensionError(fmt::format("concat_channels: {} vs {}", shape_string(s),
                                       shape_string(s0)));
    }
    channels += s[1];
    parents.push_back(p.ptr());
  }
  Tensor<T> out({s0[0], channels, s0[2], s0[3]});
  for (int n = 0; n < s0[0]; ++n) {
    T* dst = out.sample(n);
    for (const auto& p : parts) {
      const std::size_t len = p.value().sample_size();
      std::copy_n(p.value().sample(n), len, dst);
      dst += len;
    }
  }
  return make_result<T>(std::move(out), std::move(parents), [](Node<T>& self) {
    for (int n = 0; n < self.value.n(); ++n) {
      const T* src = self.grad.sample(n);
      for (auto& p : self.parents) {
        const std::size_t len = p->value.sample_size();
        if (p->requires_grad) {
          T* g = p->grad_buffer().sample(n);
          for (std::size_t i = 0; i < len; ++i) g[i] += src[i];
        }
        src += len;
      }
    }
  });
}

#define UMED_INSTANTIATE(T)                                                        \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&);          \
  template Var<T> cdc_conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&,       \
                                const Var<T>&);                                    \
  template Var<T> conv_transpose2x2<T>(const Var<T>&, const Var<T>&, const Var<T>&); \
  template Var<T> max_pool2x2<T>(const Var<T>&);                                   \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);

UMED_INSTANTIATE(float)
UMED_INSTANTIATE(double)
#undef UMED_INSTANTIATE

}  // namespace umed::nn
