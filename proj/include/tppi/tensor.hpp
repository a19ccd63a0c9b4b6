// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tppi/error.hpp"

namespace tppi {

using Dims = std::vector<std::size_t>;

enum class AxisRole { feature_map_2d, feature_map_3d };

inline std::string to_string(const Dims& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

inline std::size_t element_count(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major tensor.
///
/// Axis order is fixed by rank: rank 3 is [channels, rows, cols] and rank 4 is
/// [channels, spectral, rows, cols]. The spatial axes are always the last two.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Dims dims, T fill = T{}) : dims_(std::move(dims)) {
    check_dims();
    data_.assign(element_count(dims_), fill);
  }

  BasicTensor(Dims dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != element_count(dims_))
      throw ShapeError(detail::concat("tensor ", to_string(dims_), " needs ", element_count(dims_),
                                      " values, got ", data_.size()));
  }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t channels() const { return dims_.at(0); }
  std::size_t rows() const { return dims_.at(rank() - 2); }
  std::size_t cols() const { return dims_.at(rank() - 1); }
  /// Spectral length of a rank-4 tensor; 1 for rank 3.
  std::size_t spectral() const { return rank() == 4 ? dims_[1] : 1; }

  AxisRole role() const noexcept {
    return rank() == 4 ? AxisRole::feature_map_3d : AxisRole::feature_map_2d;
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t c, std::size_t r, std::size_t col) {
    return data_[(c * dims_[1] + r) * dims_[2] + col];
  }
  const T& at(std::size_t c, std::size_t r, std::size_t col) const {
    return data_[(c * dims_[1] + r) * dims_[2] + col];
  }
  T& at(std::size_t c, std::size_t d, std::size_t r, std::size_t col) {
    return data_[((c * dims_[1] + d) * dims_[2] + r) * dims_[3] + col];
  }
  const T& at(std::size_t c, std::size_t d, std::size_t r, std::size_t col) const {
    return data_[((c * dims_[1] + d) * dims_[2] + r) * dims_[3] + col];
  }

  /// Same data viewed under new dims; element count must match.
  BasicTensor reshaped(Dims dims) const& { return BasicTensor(std::move(dims), data_); }
  BasicTensor reshaped(Dims dims) && { return BasicTensor(std::move(dims), std::move(data_)); }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(dims_, std::move(out));
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  void check_dims() const {
    if (dims_.empty()) throw ShapeError("tensor needs at least one axis");
    for (std::size_t i = 0; i < dims_.size(); ++i)
      if (dims_[i] == 0) throw ShapeError(detail::concat("axis ", i, " of ", to_string(dims_), " is zero"));
  }

  Dims dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

/// Debug-build guard for the no-NaN/Inf invariant of kernel outputs.
template <typename T>
inline void debug_check_finite([[maybe_unused]] const BasicTensor<T>& t,
                               [[maybe_unused]] const char* where) {
#ifndef NDEBUG
  if (!t.all_finite()) throw Error(detail::concat(where, ": non-finite value in output"));
#endif
}

}  // namespace tppi
