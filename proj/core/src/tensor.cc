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

#include "umed/tensor.h"

#include <algorithm>

#include <fmt/format.h>

#include "umed/core.h"

namespace umed::nn {

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape) {
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative tensor dimension");
  }
  data_.assign(static_cast<std::size_t>(shape[0]) * shape[1] * shape[2] * shape[3],
               fill);
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
Tensor<T>& Tensor<T>::operator+=(const Tensor& other) {
  if (shape_ != other.shape_) {
    throw DimensionError(fmt::format("tensor add: {} vs {}", shape_string(shape_),
                                     shape_string(other.shape_)));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

std::string shape_string(const std::array<int, 4>& shape) {
  return fmt::format("[{}x{}x{}x{}]", shape[0], shape[1], shape[2], shape[3]);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace umed::nn
