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

#ifndef UMED_LOSSES_H_
#define UMED_LOSSES_H_

#include "umed/autograd.h"

namespace umed {

inline constexpr double kDiceSmoothing = 1e-6;

/// Mean binary cross-entropy of sigmoid(logits) against {0,1} targets,
/// computed in the numerically stable logits form.
template <typename T>
nn::Var<T> bce_with_logits(const nn::Var<T>& logits, const nn::Tensor<T>& target);

/// 1 - (2 sum(p y) + s) / (sum(p) + sum(y) + s), p = sigmoid(logits), summed
/// over every element of the batch.
template <typename T>
nn::Var<T> dice_loss(const nn::Var<T>& logits, const nn::Tensor<T>& target,
                     T smoothing = T(kDiceSmoothing));

/// Cross-entropy + dice with unit weights.
template <typename T>
nn::Var<T> seg_loss(const nn::Var<T>& logits, const nn::Tensor<T>& target);

}  // namespace umed

#endif  // UMED_LOSSES_H_
