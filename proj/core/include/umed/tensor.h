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

#ifndef UMED_TENSOR_H_
#define UMED_TENSOR_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace umed::nn {

/// N x C x H x W dense tensor, row-major. Scalars are 1 x 1 x 1 x 1.
template <typename T>
class Tensor {
 public:
  using Shape = std::array<int, 4>;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{});

  static Tensor scalar(T v) { return Tensor({1, 1, 1, 1}, v); }

  const Shape& shape() const { return shape_; }
  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t sample_size() const {
    return static_cast<std::size_t>(shape_[1]) * shape_[2] * shape_[3];
  }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(shape_[2]) * shape_[3];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* sample(int n) { return data_.data() + n * sample_size(); }
  const T* sample(int n) const { return data_.data() + n * sample_size(); }
  T* channel(int n, int c) { return sample(n) + c * plane_size(); }
  const T* channel(int n, int c) const { return sample(n) + c * plane_size(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& at(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) *
                     shape_[3] + x];
  }
  const T& at(int n, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) *
                     shape_[3] + x];
  }
  T item() const { return data_.at(0); }

  void fill(T v);
  Tensor& operator+=(const Tensor& other);

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out.data()[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

std::string shape_string(const std::array<int, 4>& shape);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace umed::nn

#endif  // UMED_TENSOR_H_
