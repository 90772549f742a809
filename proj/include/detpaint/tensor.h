/*
Copyright 2026 The detpaint Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef DETPAINT_TENSOR_H_
#define DETPAINT_TENSOR_H_

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace detpaint {

// Thrown when an argument violates a documented precondition (sizes, ranges).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown on file-system or codec failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a numeric routine cannot produce a meaningful result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cache-line aligned allocator. Numeric buffers share one alignment so that
// vectorised kernels take the same code path, and therefore the same
// summation order, on every run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

// Dense 4-D tensor in NCHW order. Weight tensors reuse the same type with
// their natural dimensions (e.g. a bias is {C, 1, 1, 1}).
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, double fill = 0.0)
      : n_(n), c_(c), h_(h), w_(w),
        data_(static_cast<std::size_t>(n) * c * h * w, fill) {
    if (n < 0 || c < 0 || h < 0 || w < 0) {
      throw ValidationError("Tensor: negative dimension");
    }
  }

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t size() const { return data_.size(); }
  // Elements per sample (C*H*W).
  std::size_t sample_size() const {
    return static_cast<std::size_t>(c_) * h_ * w_;
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(h_) * w_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  AlignedBuffer& vec() { return data_; }
  const AlignedBuffer& vec() const { return data_; }

  double& at(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x];
  }
  double at(int n, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x];
  }
  double* plane(int n, int c) {
    return data_.data() + (static_cast<std::size_t>(n) * c_ + c) * h_ * w_;
  }
  const double* plane(int n, int c) const {
    return data_.data() + (static_cast<std::size_t>(n) * c_ + c) * h_ * w_;
  }
  double* sample(int n) { return data_.data() + n * sample_size(); }
  const double* sample(int n) const {
    return data_.data() + n * sample_size();
  }

  bool SameShape(const Tensor& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }
  std::vector<int> shape() const { return {n_, c_, h_, w_}; }
  std::string ShapeString() const;

  void Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  AlignedBuffer data_;
};

inline std::string Tensor::ShapeString() const {
  return "[" + std::to_string(n_) + "," + std::to_string(c_) + "," +
         std::to_string(h_) + "," + std::to_string(w_) + "]";
}

}  // namespace detpaint

#endif  // DETPAINT_TENSOR_H_
