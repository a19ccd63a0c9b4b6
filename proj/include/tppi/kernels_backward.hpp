// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "tppi/kernels.hpp"

namespace tppi {

// Gradient kernels. Each takes the forward input, the upstream gradient of
// the forward output and accumulates parameter gradients into the given
// buffers (which must be sized like the parameters). They return the gradient
// with respect to the forward input.

template <typename T>
BasicTensor<T> conv2d_backward(const BasicTensor<T>& x, const ConvKernel2d<T>& k, const BasicTensor<T>& g,
                               std::vector<T>& grad_w, std::vector<T>* grad_b) {
  const std::size_t C = x.channels(), H = x.rows(), W = x.cols();
  const std::size_t OH = g.rows(), OW = g.cols();
  BasicTensor<T> gx(x.dims());
  for (std::size_t o = 0; o < k.out_channels; ++o) {
    const T* go = g.data().data() + o * OH * OW;
    if (grad_b) {
      T s{};
      for (std::size_t p = 0; p < OH * OW; ++p) s += go[p];
      (*grad_b)[o] += s;
    }
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < k.kh; ++i)
        for (std::size_t j = 0; j < k.kw; ++j) {
          const std::size_t widx = ((o * C + c) * k.kh + i) * k.kw + j;
          const T w = k.weights[widx];
          std::size_t lo, hi;
          if (!detail::tap_range(W, OW, k.stride_w, j, k.pad, lo, hi)) continue;
          const long shift = static_cast<long>(j) - static_cast<long>(k.pad);
          T gw{};
          for (std::size_t oy = 0; oy < OH; ++oy) {
            const long iy = static_cast<long>(oy * k.stride_h + i) - static_cast<long>(k.pad);
            if (iy < 0 || iy >= static_cast<long>(H)) continue;
            const T* xr = x.data().data() + (c * H + static_cast<std::size_t>(iy)) * W;
            T* gr = gx.data().data() + (c * H + static_cast<std::size_t>(iy)) * W;
            const T* gor = go + oy * OW;
            for (std::size_t ox = lo; ox <= hi; ++ox) {
              const long ix = static_cast<long>(ox * k.stride_w) + shift;
              gw += gor[ox] * xr[ix];
              gr[ix] += w * gor[ox];
            }
          }
          grad_w[widx] += gw;
        }
  }
  return gx;
}

template <typename T>
BasicTensor<T> conv3d_backward(const BasicTensor<T>& x, const ConvKernel3d<T>& k, const BasicTensor<T>& g,
                               std::vector<T>& grad_w, std::vector<T>* grad_b) {
  const std::size_t C = x.channels(), D = x.spectral(), H = x.rows(), W = x.cols();
  const std::size_t OD = g.spectral(), OH = g.rows(), OW = g.cols();
  BasicTensor<T> gx(x.dims());
  for (std::size_t o = 0; o < k.out_channels; ++o) {
    const T* go = g.data().data() + o * OD * OH * OW;
    if (grad_b) {
      T s{};
      for (std::size_t p = 0; p < OD * OH * OW; ++p) s += go[p];
      (*grad_b)[o] += s;
    }
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t a = 0; a < k.kd; ++a)
        for (std::size_t i = 0; i < k.kh; ++i)
          for (std::size_t j = 0; j < k.kw; ++j) {
            const std::size_t widx = (((o * C + c) * k.kd + a) * k.kh + i) * k.kw + j;
            const T w = k.weights[widx];
            std::size_t lo, hi;
            if (!detail::tap_range(W, OW, k.stride_w, j, k.pad_hw, lo, hi)) continue;
            const long shift = static_cast<long>(j) - static_cast<long>(k.pad_hw);
            T gw{};
            for (std::size_t od = 0; od < OD; ++od) {
              const long id = static_cast<long>(od * k.stride_d + a) - static_cast<long>(k.pad_d);
              if (id < 0 || id >= static_cast<long>(D)) continue;
              for (std::size_t oy = 0; oy < OH; ++oy) {
                const long iy = static_cast<long>(oy * k.stride_h + i) - static_cast<long>(k.pad_hw);
                if (iy < 0 || iy >= static_cast<long>(H)) continue;
                const std::size_t base = ((c * D + static_cast<std::size_t>(id)) * H + static_cast<std::size_t>(iy)) * W;
                const T* xr = x.data().data() + base;
                T* gr = gx.data().data() + base;
                const T* gor = go + (od * OH + oy) * OW;
                for (std::size_t ox = lo; ox <= hi; ++ox) {
                  const long ix = static_cast<long>(ox * k.stride_w) + shift;
                  gw += gor[ox] * xr[ix];
                  gr[ix] += w * gor[ox];
                }
              }
            }
            grad_w[widx] += gw;
          }
  }
  return gx;
}

/// Frozen statistics: gradients flow to gamma, beta and the input only.
template <typename T>
BasicTensor<T> batchnorm_backward(const BasicTensor<T>& x, const BatchNormParams<T>& p, const BasicTensor<T>& g,
                                  std::vector<T>& grad_gamma, std::vector<T>& grad_beta) {
  BasicTensor<T> gx(x.dims());
  const std::size_t plane = x.size() / x.channels();
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const T denom = std::sqrt(p.running_var[c] + p.epsilon);
    const T* xv = x.data().data() + c * plane;
    const T* gv = g.data().data() + c * plane;
    T* out = gx.data().data() + c * plane;
    T gg{}, gb{};
    for (std::size_t i = 0; i < plane; ++i) {
      gg += gv[i] * ((xv[i] - p.running_mean[c]) / denom);
      gb += gv[i];
      out[i] = gv[i] * p.gamma[c] / denom;
    }
    grad_gamma[c] += gg;
    grad_beta[c] += gb;
  }
  return gx;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, BasicTensor<T> g) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(x[i] > T(0))) g[i] = T(0);
  return g;
}

template <typename T>
BasicTensor<T> avgpool_backward(const BasicTensor<T>& x, std::size_t kernel, std::size_t stride, std::size_t pad,
                                const BasicTensor<T>& g) {
  const std::size_t C = x.channels(), H = x.rows(), W = x.cols();
  const std::size_t OH = g.rows(), OW = g.cols();
  const T area = static_cast<T>(kernel * kernel);
  BasicTensor<T> gx(x.dims());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        const T v = g.at(c, oy, ox) / area;
        for (std::size_t i = 0; i < kernel; ++i) {
          const long iy = static_cast<long>(oy * stride + i) - static_cast<long>(pad);
          if (iy < 0 || iy >= static_cast<long>(H)) continue;
          for (std::size_t j = 0; j < kernel; ++j) {
            const long ix = static_cast<long>(ox * stride + j) - static_cast<long>(pad);
            if (ix < 0 || ix >= static_cast<long>(W)) continue;
            gx.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) += v;
          }
        }
      }
  return gx;
}

template <typename T>
BasicTensor<T> fc_backward(const BasicTensor<T>& x, const FcParams<T>& p, const BasicTensor<T>& g,
                           std::vector<T>& grad_w, std::vector<T>* grad_b) {
  BasicTensor<T> gx(x.dims());
  for (std::size_t o = 0; o < p.out_features; ++o) {
    const T go = g[o];
    if (grad_b) (*grad_b)[o] += go;
    const T* wr = p.weights.data() + o * p.in_features;
    T* gwr = grad_w.data() + o * p.in_features;
    for (std::size_t i = 0; i < p.in_features; ++i) {
      gwr[i] += go * x[i];
      gx[i] += go * wr[i];
    }
  }
  return gx;
}

}  // namespace tppi
