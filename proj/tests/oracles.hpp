// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference implementations used as test oracles. They are written as plain
// nested loops in double precision and share no code with the library
// kernels.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tppi/tensor.hpp"

namespace oracle {

inline std::vector<float> random_values(std::size_t n, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline tppi::Tensor random_tensor(tppi::Dims dims, std::mt19937_64& rng) {
  const std::size_t n = tppi::element_count(dims);
  return tppi::Tensor(std::move(dims), random_values(n, rng));
}

// y[o][oy][ox] = b[o] + sum_{c,i,j} w[o][c][i][j] * xpad[c][oy*sh+i][ox*sw+j]
inline std::vector<double> conv2d(const std::vector<float>& x, std::size_t C, std::size_t H, std::size_t W,
                                  const std::vector<float>& w, const std::vector<float>& b, std::size_t O,
                                  std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw, std::size_t pad,
                                  std::size_t& OH, std::size_t& OW) {
  OH = (H + 2 * pad - kh) / sh + 1;
  OW = (W + 2 * pad - kw) / sw + 1;
  std::vector<double> y(O * OH * OW, 0.0);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double s = b.empty() ? 0.0 : b[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
              const long iy = long(oy * sh + i) - long(pad), ix = long(ox * sw + j) - long(pad);
              if (iy < 0 || ix < 0 || iy >= long(H) || ix >= long(W)) continue;
              s += double(w[((o * C + c) * kh + i) * kw + j]) * double(x[(c * H + iy) * W + ix]);
            }
        y[(o * OH + oy) * OW + ox] = s;
      }
  return y;
}

struct Shape3 {
  std::size_t d, h, w;
};

inline std::vector<double> conv3d(const std::vector<float>& x, std::size_t C, Shape3 in, const std::vector<float>& w,
                                  const std::vector<float>& b, std::size_t O, Shape3 k, Shape3 stride,
                                  std::size_t pad_d, std::size_t pad_hw, Shape3& out) {
  out.d = (in.d + 2 * pad_d - k.d) / stride.d + 1;
  out.h = (in.h + 2 * pad_hw - k.h) / stride.h + 1;
  out.w = (in.w + 2 * pad_hw - k.w) / stride.w + 1;
  std::vector<double> y(O * out.d * out.h * out.w);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t od = 0; od < out.d; ++od)
      for (std::size_t oy = 0; oy < out.h; ++oy)
        for (std::size_t ox = 0; ox < out.w; ++ox) {
          double s = b.empty() ? 0.0 : b[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t a = 0; a < k.d; ++a)
              for (std::size_t i = 0; i < k.h; ++i)
                for (std::size_t j = 0; j < k.w; ++j) {
                  const long id = long(od * stride.d + a) - long(pad_d);
                  const long iy = long(oy * stride.h + i) - long(pad_hw);
                  const long ix = long(ox * stride.w + j) - long(pad_hw);
                  if (id < 0 || iy < 0 || ix < 0 || id >= long(in.d) || iy >= long(in.h) || ix >= long(in.w)) continue;
                  s += double(w[(((o * C + c) * k.d + a) * k.h + i) * k.w + j]) *
                       double(x[((c * in.d + id) * in.h + iy) * in.w + ix]);
                }
          y[((o * out.d + od) * out.h + oy) * out.w + ox] = s;
        }
  return y;
}

inline double batchnorm(double x, double mean, double var, double eps, double gamma, double beta) {
  return (x - mean) / std::sqrt(var + eps) * gamma + beta;
}

inline std::vector<double> fc(const std::vector<float>& x, const std::vector<float>& w, const std::vector<float>& b,
                              std::size_t out) {
  std::vector<double> y(out);
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < out; ++o) {
    double s = b.empty() ? 0.0 : b[o];
    for (std::size_t i = 0; i < in; ++i) s += double(w[o * in + i]) * double(x[i]);
    y[o] = s;
  }
  return y;
}

// Reflection by repeated bouncing off the borders: -1 -> 1, n -> n-2.
inline std::size_t mirror(long i, std::size_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= long(n)) {
    if (i < 0) i = -i;
    if (i >= long(n)) i = 2 * (long(n) - 1) - i;
  }
  return std::size_t(i);
}

// Central-difference derivative of f at coordinate `slot` of `values`.
template <typename F>
double central_difference(std::vector<double>& values, std::size_t slot, double h, F&& f) {
  const double saved = values[slot];
  values[slot] = saved + h;
  const double up = f();
  values[slot] = saved - h;
  const double down = f();
  values[slot] = saved;
  return (up - down) / (2 * h);
}

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

}  // namespace oracle
