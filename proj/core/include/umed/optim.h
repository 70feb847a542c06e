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

#ifndef UMED_OPTIM_H_
#define UMED_OPTIM_H_

#include <vector>

#include "umed/autograd.h"

namespace umed {

/// Adam with a fixed learning rate. One instance per parameter set for the
/// whole run; moments are never reset.
template <typename T>
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(std::vector<nn::Var<T>>& params, Options options);

  /// Applies one update from the accumulated gradients (missing gradients
  /// count as zero).
  void step();
  long steps() const { return t_; }

 private:
  std::vector<nn::Var<T>>* params_;
  Options opt_;
  std::vector<std::vector<T>> m_, v_;
  long t_ = 0;
};

/// Scales all gradients so their joint L2 norm is at most `max_norm`; returns
/// the norm before scaling.
template <typename T>
double clip_grad_norm(std::vector<nn::Var<T>>& params, double max_norm);

/// Joint L2 norm of the gradients of several parameter groups.
template <typename T>
double grad_norm(const std::vector<nn::Var<T>>& params);

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace umed

#endif  // UMED_OPTIM_H_
