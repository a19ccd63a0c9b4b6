// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "tppi/error.hpp"
#include "tppi/parallel.hpp"
#include "tppi/tensor.hpp"

namespace tppi {

enum class Accumulation { f32, f64 };

/// Order in which a convolution visits the taps of one output element.
///
/// channel_major is the canonical order: in-channel outermost, then spectral,
/// then kernel row, then kernel col. The order is relative to the output
/// position, so any two executions that see the same input neighbourhood
/// produce bit-identical sums. spatial_major puts the in-channel innermost and
/// exists only to measure how far an unmatched order drifts.
enum class ReductionOrder { channel_major, spatial_major };

struct KernelOptions {
  Accumulation accumulation = Accumulation::f32;
  ReductionOrder order = ReductionOrder::channel_major;
};

template <typename T>
struct ConvKernel2d {
  std::size_t out_channels = 0, in_channels = 0, kh = 1, kw = 1;
  std::vector<T> weights;  // [out, in, kh, kw]
  std::vector<T> bias;     // [out] or empty
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad = 0;

  void validate() const {
    if (!out_channels || !in_channels || !kh || !kw || !stride_h || !stride_w)
      throw ShapeError("conv2d: channel counts, kernel dims and strides must be positive");
    if (weights.size() != out_channels * in_channels * kh * kw)
      throw ShapeError(detail::concat("conv2d: expected ", out_channels * in_channels * kh * kw,
                                      " weights, found ", weights.size()));
    if (!bias.empty() && bias.size() != out_channels)
      throw ShapeError(detail::concat("conv2d: expected ", out_channels, " bias values, found ", bias.size()));
  }
};

template <typename T>
struct ConvKernel3d {
  std::size_t out_channels = 0, in_channels = 0, kd = 1, kh = 1, kw = 1;
  std::vector<T> weights;  // [out, in, kd, kh, kw]
  std::vector<T> bias;
  std::size_t stride_d = 1, stride_h = 1, stride_w = 1;
  std::size_t pad_d = 0, pad_hw = 0;

  void validate() const {
    if (!out_channels || !in_channels || !kd || !kh || !kw || !stride_d || !stride_h || !stride_w)
      throw ShapeError("conv3d: channel counts, kernel dims and strides must be positive");
    const std::size_t n = out_channels * in_channels * kd * kh * kw;
    if (weights.size() != n)
      throw ShapeError(detail::concat("conv3d: expected ", n, " weights, found ", weights.size()));
    if (!bias.empty() && bias.size() != out_channels)
      throw ShapeError(detail::concat("conv3d: expected ", out_channels, " bias values, found ", bias.size()));
  }
};

template <typename T>
struct BatchNormParams {
  std::vector<T> gamma, beta, running_mean, running_var;
  T epsilon = T(1e-5);

  std::size_t channels() const { return gamma.size(); }

  void validate() const {
    const std::size_t c = gamma.size();
    if (beta.size() != c || running_mean.size() != c || running_var.size() != c)
      throw ShapeError("batchnorm: gamma, beta, mean and var must have equal length");
    for (std::size_t i = 0; i < c; ++i)
      if (!(running_var[i] >= T(0)))
        throw ShapeError(detail::concat("batchnorm: running_var[", i, "] is negative"));
  }
};

template <typename T>
struct FcParams {
  std::size_t in_features = 0, out_features = 0;
  std::vector<T> weights;  // [out, in]
  std::vector<T> bias;
};

namespace detail {

inline std::size_t conv_out(std::size_t in, std::size_t pad, std::size_t k, std::size_t stride,
                            const char* op, const char* axis) {
  const std::size_t padded = in + 2 * pad;
  if (padded < k)
    throw ShapeError(concat(op, ": kernel exceeds input on ", axis, " axis (", k, " > ", padded, ")"));
  return (padded - k) / stride + 1;
}

// Output index range [lo, hi] for which ox*stride + tap - pad lands in [0, n).
inline bool tap_range(std::size_t n, std::size_t out, std::size_t stride, std::size_t tap,
                      std::size_t pad, std::size_t& lo, std::size_t& hi) {
  lo = tap < pad ? (pad - tap + stride - 1) / stride : 0;
  const long top = static_cast<long>(n) - 1 + static_cast<long>(pad) - static_cast<long>(tap);
  if (top < 0) return false;
  hi = std::min(out - 1, static_cast<std::size_t>(top) / stride);
  return lo <= hi;
}

template <typename Acc, typename T>
BasicTensor<T> conv2d_impl(const BasicTensor<T>& x, const ConvKernel2d<T>& k, ReductionOrder order) {
  const std::size_t C = x.channels(), H = x.rows(), W = x.cols();
  const std::size_t OH = conv_out(H, k.pad, k.kh, k.stride_h, "conv2d", "row");
  const std::size_t OW = conv_out(W, k.pad, k.kw, k.stride_w, "conv2d", "col");
  BasicTensor<T> y({k.out_channels, OH, OW});
  const T* xs = x.data().data();
  const T* ws = k.weights.data();

  parallel_for(0, k.out_channels * OH, [&](std::size_t row) {
    const std::size_t o = row / OH, oy = row % OH;
    std::vector<Acc> acc(OW, Acc{});
    auto tap = [&](std::size_t c, std::size_t i, std::size_t j) {
      const long iy = static_cast<long>(oy * k.stride_h + i) - static_cast<long>(k.pad);
      if (iy < 0 || iy >= static_cast<long>(H)) return;
      std::size_t lo, hi;
      if (!tap_range(W, OW, k.stride_w, j, k.pad, lo, hi)) return;
      const Acc w = static_cast<Acc>(ws[((o * C + c) * k.kh + i) * k.kw + j]);
      const T* xr = xs + (c * H + static_cast<std::size_t>(iy)) * W;
      const long shift = static_cast<long>(j) - static_cast<long>(k.pad);
      for (std::size_t ox = lo; ox <= hi; ++ox)
        acc[ox] += w * static_cast<Acc>(xr[static_cast<long>(ox * k.stride_w) + shift]);
    };
    if (order == ReductionOrder::channel_major) {
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < k.kh; ++i)
          for (std::size_t j = 0; j < k.kw; ++j) tap(c, i, j);
    } else {
      for (std::size_t i = 0; i < k.kh; ++i)
        for (std::size_t j = 0; j < k.kw; ++j)
          for (std::size_t c = 0; c < C; ++c) tap(c, i, j);
    }
    T* yr = y.data().data() + row * OW;
    const Acc b = k.bias.empty() ? Acc{} : static_cast<Acc>(k.bias[o]);
    for (std::size_t ox = 0; ox < OW; ++ox) yr[ox] = static_cast<T>(acc[ox] + b);
  });
  return y;
}

template <typename Acc, typename T>
BasicTensor<T> conv3d_impl(const BasicTensor<T>& x, const ConvKernel3d<T>& k, ReductionOrder order) {
  const std::size_t C = x.channels(), D = x.spectral(), H = x.rows(), W = x.cols();
  const std::size_t OD = conv_out(D, k.pad_d, k.kd, k.stride_d, "conv3d", "spectral");
  const std::size_t OH = conv_out(H, k.pad_hw, k.kh, k.stride_h, "conv3d", "row");
  const std::size_t OW = conv_out(W, k.pad_hw, k.kw, k.stride_w, "conv3d", "col");
  BasicTensor<T> y({k.out_channels, OD, OH, OW});
  const T* xs = x.data().data();
  const T* ws = k.weights.data();

  parallel_for(0, k.out_channels * OD * OH, [&](std::size_t row) {
    const std::size_t o = row / (OD * OH);
    const std::size_t od = (row / OH) % OD;
    const std::size_t oy = row % OH;
    std::vector<Acc> acc(OW, Acc{});
    auto tap = [&](std::size_t c, std::size_t a, std::size_t i, std::size_t j) {
      const long id = static_cast<long>(od * k.stride_d + a) - static_cast<long>(k.pad_d);
      if (id < 0 || id >= static_cast<long>(D)) return;
      const long iy = static_cast<long>(oy * k.stride_h + i) - static_cast<long>(k.pad_hw);
      if (iy < 0 || iy >= static_cast<long>(H)) return;
      std::size_t lo, hi;
      if (!tap_range(W, OW, k.stride_w, j, k.pad_hw, lo, hi)) return;
      const Acc w = static_cast<Acc>(ws[(((o * C + c) * k.kd + a) * k.kh + i) * k.kw + j]);
      const T* xr = xs + ((c * D + static_cast<std::size_t>(id)) * H + static_cast<std::size_t>(iy)) * W;
      const long shift = static_cast<long>(j) - static_cast<long>(k.pad_hw);
      for (std::size_t ox = lo; ox <= hi; ++ox)
        acc[ox] += w * static_cast<Acc>(xr[static_cast<long>(ox * k.stride_w) + shift]);
    };
    if (order == ReductionOrder::channel_major) {
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t a = 0; a < k.kd; ++a)
          for (std::size_t i = 0; i < k.kh; ++i)
            for (std::size_t j = 0; j < k.kw; ++j) tap(c, a, i, j);
    } else {
      for (std::size_t a = 0; a < k.kd; ++a)
        for (std::size_t i = 0; i < k.kh; ++i)
          for (std::size_t j = 0; j < k.kw; ++j)
            for (std::size_t c = 0; c < C; ++c) tap(c, a, i, j);
    }
    T* yr = y.data().data() + row * OW;
    const Acc b = k.bias.empty() ? Acc{} : static_cast<Acc>(k.bias[o]);
    for (std::size_t ox = 0; ox < OW; ++ox) yr[ox] = static_cast<T>(acc[ox] + b);
  });
  return y;
}

template <typename Acc, typename T>
BasicTensor<T> avgpool_impl(const BasicTensor<T>& x, std::size_t kernel, std::size_t stride, std::size_t pad) {
  const std::size_t C = x.channels(), H = x.rows(), W = x.cols();
  const std::size_t OH = conv_out(H, pad, kernel, stride, "avgpool2d", "row");
  const std::size_t OW = conv_out(W, pad, kernel, stride, "avgpool2d", "col");
  BasicTensor<T> y({C, OH, OW});
  const Acc area = static_cast<Acc>(kernel * kernel);
  parallel_for(0, C * OH, [&](std::size_t row) {
    const std::size_t c = row / OH, oy = row % OH;
    for (std::size_t ox = 0; ox < OW; ++ox) {
      Acc sum{};
      for (std::size_t i = 0; i < kernel; ++i) {
        const long iy = static_cast<long>(oy * stride + i) - static_cast<long>(pad);
        if (iy < 0 || iy >= static_cast<long>(H)) continue;
        for (std::size_t j = 0; j < kernel; ++j) {
          const long ix = static_cast<long>(ox * stride + j) - static_cast<long>(pad);
          if (ix < 0 || ix >= static_cast<long>(W)) continue;
          sum += static_cast<Acc>(x.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)));
        }
      }
      y.at(c, oy, ox) = static_cast<T>(sum / area);
    }
  });
  return y;
}

template <typename Acc, typename T>
BasicTensor<T> fc_impl(const BasicTensor<T>& x, const FcParams<T>& p) {
  BasicTensor<T> y({p.out_features, 1, 1});
  const T* xs = x.data().data();
  for (std::size_t o = 0; o < p.out_features; ++o) {
    Acc acc{};
    const T* wr = p.weights.data() + o * p.in_features;
    for (std::size_t i = 0; i < p.in_features; ++i) acc += static_cast<Acc>(wr[i]) * static_cast<Acc>(xs[i]);
    y[o] = static_cast<T>(acc + (p.bias.empty() ? Acc{} : static_cast<Acc>(p.bias[o])));
  }
  return y;
}

template <typename T>
void require_rank(const BasicTensor<T>& x, std::size_t rank, const char* op) {
  if (x.rank() != rank)
    throw ShapeError(concat(op, ": expected rank-", rank, " input, got ", to_string(x.dims())));
}

}  // namespace detail

/// 2-D convolution over a rank-3 tensor with symmetric zero padding.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const ConvKernel2d<T>& k, KernelOptions opts = {}) {
  detail::require_rank(x, 3, "conv2d");
  k.validate();
  if (x.channels() != k.in_channels)
    throw ShapeError(detail::concat("conv2d: channel axis mismatch, input has ", x.channels(),
                                    ", kernel expects ", k.in_channels));
  auto y = opts.accumulation == Accumulation::f64 ? detail::conv2d_impl<double>(x, k, opts.order)
                                                  : detail::conv2d_impl<T>(x, k, opts.order);
  debug_check_finite(y, "conv2d");
  return y;
}

/// 3-D convolution over a rank-4 tensor; padding is separate for the spectral
/// axis and the two spatial axes.
template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& x, const ConvKernel3d<T>& k, KernelOptions opts = {}) {
  detail::require_rank(x, 4, "conv3d");
  k.validate();
  if (x.channels() != k.in_channels)
    throw ShapeError(detail::concat("conv3d: channel axis mismatch, input has ", x.channels(),
                                    ", kernel expects ", k.in_channels));
  auto y = opts.accumulation == Accumulation::f64 ? detail::conv3d_impl<double>(x, k, opts.order)
                                                  : detail::conv3d_impl<T>(x, k, opts.order);
  debug_check_finite(y, "conv3d");
  return y;
}

/// Frozen-statistics batch norm along axis 0.
template <typename T>
BasicTensor<T> batchnorm_infer(const BasicTensor<T>& x, const BatchNormParams<T>& p) {
  p.validate();
  if (x.channels() != p.channels())
    throw ShapeError(detail::concat("batchnorm: channel axis mismatch, input has ", x.channels(),
                                    ", params have ", p.channels()));
  BasicTensor<T> y = x;
  const std::size_t plane = x.size() / x.channels();
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const T denom = std::sqrt(p.running_var[c] + p.epsilon);
    T* v = y.data().data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) v[i] = (v[i] - p.running_mean[c]) / denom * p.gamma[c] + p.beta[c];
  }
  return y;
}

template <typename T>
BasicTensor<T> relu(BasicTensor<T> x) {
  for (auto& v : x.data()) v = v > T(0) ? v : T(0);
  return x;
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.dims() != b.dims())
    throw ShapeError(detail::concat("add: shape mismatch ", to_string(a.dims()), " vs ", to_string(b.dims())));
  BasicTensor<T> y = a;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  return y;
}

/// Average pool with a k×k window; the divisor is always k*k.
template <typename T>
BasicTensor<T> avgpool2d_sliding(const BasicTensor<T>& x, std::size_t k, std::size_t stride = 1,
                                 std::size_t pad = 0, KernelOptions opts = {}) {
  detail::require_rank(x, 3, "avgpool2d");
  if (!k || !stride) throw ShapeError("avgpool2d: kernel and stride must be positive");
  return opts.accumulation == Accumulation::f64 ? detail::avgpool_impl<double>(x, k, stride, pad)
                                                : detail::avgpool_impl<T>(x, k, stride, pad);
}

/// Mean over the spatial plane, summed in row-major order so it matches a
/// sliding pool whose window covers the whole plane.
template <typename T>
BasicTensor<T> global_avgpool(const BasicTensor<T>& x, KernelOptions opts = {}) {
  detail::require_rank(x, 3, "global_avgpool");
  if (x.rows() != x.cols())
    throw ShapeError(detail::concat("global_avgpool: non-square plane ", to_string(x.dims())));
  return avgpool2d_sliding(x, x.rows(), 1, 0, opts);
}

/// Fully connected layer on a flattened [C, s, s] input; output is [out, 1, 1].
template <typename T>
BasicTensor<T> fc(const BasicTensor<T>& x, const FcParams<T>& p, KernelOptions opts = {}) {
  if (x.size() != p.in_features)
    throw ShapeError(detail::concat("fc: expected ", p.in_features, " input features, got ", x.size(),
                                    " from ", to_string(x.dims())));
  if (p.weights.size() != p.in_features * p.out_features)
    throw ShapeError(detail::concat("fc: expected ", p.in_features * p.out_features, " weights, found ",
                                    p.weights.size()));
  return opts.accumulation == Accumulation::f64 ? detail::fc_impl<double>(x, p) : detail::fc_impl<T>(x, p);
}

/// Softmax across the channel axis at every position.
template <typename T>
BasicTensor<T> softmax(BasicTensor<T> x) {
  const std::size_t C = x.channels(), plane = x.size() / C;
  for (std::size_t p = 0; p < plane; ++p) {
    T mx = x[p];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, x[c * plane + p]);
    T sum{};
    for (std::size_t c = 0; c < C; ++c) sum += (x[c * plane + p] = std::exp(x[c * plane + p] - mx));
    for (std::size_t c = 0; c < C; ++c) x[c * plane + p] /= sum;
  }
  return x;
}

/// Reflects an out-of-range index about the border without repeating the
/// edge sample (…, 2, 1, [0, 1, 2, …]).
inline std::size_t reflect_index(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<long>(n) ? i : period - i);
}

template <typename T>
BasicTensor<T> pad_spatial(const BasicTensor<T>& x, std::size_t top, std::size_t bottom, std::size_t left,
                           std::size_t right, bool mirror) {
  const std::size_t H = x.rows(), W = x.cols();
  if (mirror && (top >= H || bottom >= H || left >= W || right >= W))
    throw ShapeError(detail::concat("pad_mirror: pad widths (", top, ", ", bottom, ", ", left, ", ", right,
                                    ") must be smaller than the plane ", H, "x", W));
  Dims dims = x.dims();
  const std::size_t OH = H + top + bottom, OW = W + left + right;
  dims[dims.size() - 2] = OH;
  dims[dims.size() - 1] = OW;
  BasicTensor<T> y(dims);
  const std::size_t planes = x.size() / (H * W);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.data().data() + p * H * W;
    T* dst = y.data().data() + p * OH * OW;
    for (std::size_t r = 0; r < OH; ++r) {
      const long sr = static_cast<long>(r) - static_cast<long>(top);
      const bool row_inside = sr >= 0 && sr < static_cast<long>(H);
      if (!mirror && !row_inside) continue;
      const std::size_t rr = row_inside ? static_cast<std::size_t>(sr) : reflect_index(sr, H);
      for (std::size_t c = 0; c < OW; ++c) {
        const long sc = static_cast<long>(c) - static_cast<long>(left);
        const bool col_inside = sc >= 0 && sc < static_cast<long>(W);
        if (!mirror && !col_inside) continue;
        dst[r * OW + c] = src[rr * W + (col_inside ? static_cast<std::size_t>(sc) : reflect_index(sc, W))];
      }
    }
  }
  return y;
}

/// Reflected-border padding of the two spatial axes.
template <typename T>
BasicTensor<T> pad_mirror(const BasicTensor<T>& x, std::size_t top, std::size_t bottom, std::size_t left,
                          std::size_t right) {
  return pad_spatial(x, top, bottom, left, right, true);
}

template <typename T>
BasicTensor<T> pad_zero(const BasicTensor<T>& x, std::size_t top, std::size_t bottom, std::size_t left,
                        std::size_t right) {
  return pad_spatial(x, top, bottom, left, right, false);
}

/// Spatial window [top, top+h) × [left, left+w) of every plane.
template <typename T>
BasicTensor<T> crop(const BasicTensor<T>& x, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  const std::size_t H = x.rows(), W = x.cols();
  if (top + h > H || left + w > W || !h || !w)
    throw ShapeError(detail::concat("crop: window ", h, "x", w, " at (", top, ", ", left, ") exceeds ", H, "x", W));
  Dims dims = x.dims();
  dims[dims.size() - 2] = h;
  dims[dims.size() - 1] = w;
  BasicTensor<T> y(dims);
  const std::size_t planes = x.size() / (H * W);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t r = 0; r < h; ++r) {
      const T* src = x.data().data() + (p * H + top + r) * W + left;
      std::copy(src, src + w, y.data().data() + (p * h + r) * w);
    }
  return y;
}

/// [C, D, H, W] -> [C·D, H, W]; output channel index is c·D + d.
template <typename T>
BasicTensor<T> collapse_spectral(BasicTensor<T> x) {
  detail::require_rank(x, 4, "collapse_spectral");
  const Dims d = x.dims();
  return std::move(x).reshaped({d[0] * d[1], d[2], d[3]});
}

/// Inverse of collapse_spectral.
template <typename T>
BasicTensor<T> expand_spectral(BasicTensor<T> x, std::size_t spectral) {
  detail::require_rank(x, 3, "expand_spectral");
  const Dims d = x.dims();
  if (!spectral || d[0] % spectral)
    throw ShapeError(detail::concat("expand_spectral: ", d[0], " channels not divisible by ", spectral));
  return std::move(x).reshaped({d[0] / spectral, spectral, d[1], d[2]});
}

}  // namespace tppi
