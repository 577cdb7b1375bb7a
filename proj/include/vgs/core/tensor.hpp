// Copyright 2026 The vgsalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <new>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vgs::core {

using Shape = std::vector<std::size_t>;

/// Thrown for any dimension or argument mismatch between tensors.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape);

/// 64-byte aligned allocation. Vectorized kernels peel unaligned heads, so
/// without a fixed alignment the summation order (and the last bits of the
/// result) would depend on where the heap placed a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

/// Dense row-major tensor. Owns its storage; copies are deep.
template <typename S>
class Tensor {
 public:
  using value_type = S;
  using Storage = std::vector<S, AlignedAllocator<S>>;

  Tensor() = default;
  explicit Tensor(Shape shape, S fill = S{0})
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, const std::vector<S>& data)
      : Tensor(std::move(shape), Storage(data.begin(), data.end())) {}
  Tensor(Shape shape, std::initializer_list<S> data)
      : Tensor(std::move(shape), Storage(data.begin(), data.end())) {}
  Tensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor scalar(S v) { return Tensor(Shape{}, Storage{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  S* ptr() { return data_.data(); }
  const S* ptr() const { return data_.data(); }
  std::span<S> data() { return data_; }
  std::span<const S> data() const { return data_; }
  Storage& storage() { return data_; }
  const Storage& storage() const { return data_; }
  std::vector<S> to_vector() const { return {data_.begin(), data_.end()}; }

  S& operator[](std::size_t i) { return data_[i]; }
  const S& operator[](std::size_t i) const { return data_[i]; }

  S item() const {
    if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor");
    return data_[0];
  }

  void fill(S v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same storage, new shape with identical element count.
  Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                       shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  template <typename To>
  Tensor<To> cast() const {
    return Tensor<To>(shape_, typename Tensor<To>::Storage(data_.begin(), data_.end()));
  }

 private:
  Shape shape_;
  Storage data_;
};

}  // namespace vgs::core
