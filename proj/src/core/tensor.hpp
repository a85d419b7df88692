// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace dhs {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& dims);

inline std::size_t shape_numel(const Shape& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

enum class Precision : std::uint8_t { kSingle = 0, kDouble = 1 };

template <typename T>
constexpr Precision precision_of();
template <>
constexpr Precision precision_of<float>() { return Precision::kSingle; }
template <>
constexpr Precision precision_of<double>() { return Precision::kDouble; }

/// Dense row-major N-dimensional array. Every extent is at least 1, except
/// that a channel axis may be empty for concat identities.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape dims, T fill = T(0)) : dims_(std::move(dims)), data_(shape_numel(dims_), fill) {}
  Tensor(Shape dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    require(shape_numel(dims_) == data_.size(), ErrorKind::kShape,
            "buffer of " + std::to_string(data_.size()) + " values does not fill " + shape_str(dims_));
  }
  Tensor(std::initializer_list<std::size_t> dims, std::initializer_list<T> values)
      : Tensor(Shape(dims), std::vector<T>(values)) {}

  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // NCHW accessors; callers guarantee rank 4.
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  void reshape(Shape dims) {
    require(shape_numel(dims) == data_.size(), ErrorKind::kShape,
            "cannot reshape " + shape_str(dims_) + " to " + shape_str(dims));
    dims_ = std::move(dims);
  }

  bool all_finite() const noexcept {
    for (T v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(dims_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.dims_ == b.dims_ && a.data_ == b.data_; }

 private:
  Shape dims_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> zeros_like(const Tensor<T>& t) {
  return Tensor<T>(t.dims());
}

template <typename T>
void require_finite(const Tensor<T>& t, const char* what) {
  require(t.all_finite(), ErrorKind::kNumeric, std::string("non-finite value in ") + what);
}

inline void require_dims(const Shape& got, const Shape& want, const char* what) {
  require(got == want, ErrorKind::kShape,
          std::string(what) + ": expected " + shape_str(want) + ", got " + shape_str(got));
}

inline void require_rank(const Shape& got, std::size_t rank, const char* what) {
  require(got.size() == rank, ErrorKind::kShape,
          std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(got));
}

/// A trainable tensor and its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.dims()) {}

  void zero_grad() { grad.fill(T(0)); }
};

}  // namespace dhs
