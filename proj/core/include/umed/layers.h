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

#ifndef UMED_LAYERS_H_
#define UMED_LAYERS_H_

#include <vector>

#include "umed/autograd.h"

namespace umed::nn {

// Kernels are applied in correlation form: out(r) = sum_k w(k) x(r + k - c)
// with replicate padding of k/2, stride 1. Weight layout is Cout x Cin x k x k and
// the bias (optional, pass an empty Var) is 1 x Cout x 1 x 1.

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

/// Central difference convolution over the full 3x3 neighbourhood:
///   out(r) = sum_k wv(k) x(r+k) + sum_k wc(k) [x(r+k) - x(r)]
/// Both terms are evaluated as written (not via the folded kernel), so the
/// folded identity conv(x, wv + wc) - sum(wc) x stays an independent check.
template <typename T>
Var<T> cdc_conv2d(const Var<T>& x, const Var<T>& weight_vanilla,
                  const Var<T>& weight_diff, const Var<T>& bias);

/// 2x2 stride-2 transposed convolution; weight is Cin x Cout x 2 x 2.
template <typename T>
Var<T> conv_transpose2x2(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

/// 2x2 max pooling, stride 2. Requires even height and width.
template <typename T>
Var<T> max_pool2x2(const Var<T>& x);

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

}  // namespace umed::nn

#endif  // UMED_LAYERS_H_
