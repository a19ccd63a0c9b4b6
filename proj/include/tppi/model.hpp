// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "tppi/kernels.hpp"
#include "tppi/kernels_backward.hpp"
#include "tppi/network.hpp"

namespace tppi {

/// Executable form of a NetworkGraph with parameters held in T.
///
/// The graph supplies structure; parameters are copied in on construction and
/// can be written back with to_graph(). Every parametric layer must carry
/// weights.
template <typename T>
class Model {
 public:
  struct Layer {
    LayerSpec spec;  // geometry only; parameter arrays live below
    ConvKernel2d<T> conv2d;
    ConvKernel3d<T> conv3d;
    BatchNormParams<T> bn;
    FcParams<T> fc;
    std::size_t partner = 0;  // matching residual marker
  };

  /// Per-layer inputs recorded by forward_trace; inputs.back() is the output.
  struct Trace {
    std::vector<BasicTensor<T>> inputs;
  };

  explicit Model(const NetworkGraph& net) : graph_(net) {
    check_graph(net);
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      const auto& s = net.layers[i];
      Layer L;
      L.spec = s;
      L.spec.weights.clear();
      L.spec.bias.clear();
      L.spec.gamma.clear();
      L.spec.beta.clear();
      L.spec.running_mean.clear();
      L.spec.running_var.clear();
      if (is_parametric(s.kind) && !s.has_weights())
        throw ValidationError(detail::concat("layer '", s.id, "' has no weights; initialize or train the network"));
      auto conv = [](const std::vector<float>& v) { return std::vector<T>(v.begin(), v.end()); };
      switch (s.kind) {
        case LayerKind::Conv2d:
          L.conv2d = {s.out_channels, s.in_channels, s.kh, s.kw, conv(s.weights), conv(s.bias), s.stride_h,
                      s.stride_w, s.pad};
          break;
        case LayerKind::Conv3d:
          L.conv3d = {s.out_channels, s.in_channels, s.kd,       s.kh,       s.kw,    conv(s.weights),
                      conv(s.bias),   s.stride_d,    s.stride_h, s.stride_w, s.pad_d, s.pad};
          break;
        case LayerKind::BatchNorm:
          L.bn = {conv(s.gamma), conv(s.beta), conv(s.running_mean), conv(s.running_var), static_cast<T>(s.epsilon)};
          break;
        case LayerKind::Fc:
          L.fc = {s.in_features, s.out_features, conv(s.weights), conv(s.bias)};
          break;
        case LayerKind::ResidualBegin:
          open.push_back(i);
          break;
        case LayerKind::ResidualEnd:
          L.partner = open.back();
          layers_[open.back()].partner = i;
          open.pop_back();
          break;
        default:
          break;
      }
      layers_.push_back(std::move(L));
    }
    differentiable_end_ = layers_.size();
    if (!layers_.empty() && layers_.back().spec.kind == LayerKind::Softmax) --differentiable_end_;
  }

  const NetworkGraph& structure() const { return graph_; }
  std::size_t size() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return layers_[i]; }
  Layer& layer(std::size_t i) { return layers_[i]; }

  /// Rank-3/4 input tensor for a [bands, rows, cols] cube window.
  BasicTensor<T> wrap_input(BasicTensor<T> cube_window) const {
    if (graph_.rank == 4) {
      const Dims d = cube_window.dims();
      return std::move(cube_window).reshaped({1, d[0], d[1], d[2]});
    }
    return cube_window;
  }

  BasicTensor<T> forward(BasicTensor<T> x, KernelOptions opts = {}) const {
    std::vector<BasicTensor<T>> skips;
    for (std::size_t i = 0; i < layers_.size(); ++i) x = apply(i, std::move(x), skips, opts);
    return x;
  }

  /// Forward pass up to (not including) a trailing Softmax, keeping every
  /// layer input for backward().
  Trace forward_trace(BasicTensor<T> x, KernelOptions opts = {}) const {
    Trace t;
    std::vector<BasicTensor<T>> skips;
    t.inputs.reserve(differentiable_end_ + 1);
    for (std::size_t i = 0; i < differentiable_end_; ++i) {
      t.inputs.push_back(x);
      x = apply(i, std::move(x), skips, opts);
    }
    t.inputs.push_back(std::move(x));
    return t;
  }

  /// Views of every trainable array in a fixed order (layer order; weights,
  /// bias for conv/fc; gamma, beta for batch norm).
  std::vector<std::span<T>> parameters() {
    std::vector<std::span<T>> out;
    for (auto& L : layers_) {
      switch (L.spec.kind) {
        case LayerKind::Conv2d:
          out.emplace_back(L.conv2d.weights);
          if (!L.conv2d.bias.empty()) out.emplace_back(L.conv2d.bias);
          break;
        case LayerKind::Conv3d:
          out.emplace_back(L.conv3d.weights);
          if (!L.conv3d.bias.empty()) out.emplace_back(L.conv3d.bias);
          break;
        case LayerKind::Fc:
          out.emplace_back(L.fc.weights);
          if (!L.fc.bias.empty()) out.emplace_back(L.fc.bias);
          break;
        case LayerKind::BatchNorm:
          out.emplace_back(L.bn.gamma);
          out.emplace_back(L.bn.beta);
          break;
        default:
          break;
      }
    }
    return out;
  }

  /// Zero-filled gradient buffers aligned with parameters().
  std::vector<std::vector<T>> zero_gradients() {
    std::vector<std::vector<T>> g;
    for (auto p : parameters()) g.emplace_back(p.size(), T{});
    return g;
  }

  /// Accumulates d(loss)/d(params) into grads given d(loss)/d(output).
  void backward(const Trace& trace, BasicTensor<T> g, std::vector<std::vector<T>>& grads) const {
    // Parameter slot of each layer within grads.
    std::vector<std::size_t> slot(layers_.size(), 0);
    std::size_t next = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      slot[i] = next;
      const auto& L = layers_[i];
      if (is_conv(L.spec.kind)) next += (L.spec.kind == LayerKind::Conv2d ? L.conv2d.bias : L.conv3d.bias).empty() ? 1 : 2;
      if (L.spec.kind == LayerKind::Fc) next += L.fc.bias.empty() ? 1 : 2;
      if (L.spec.kind == LayerKind::BatchNorm) next += 2;
    }

    std::vector<BasicTensor<T>> pending(layers_.size());
    for (std::size_t n = differentiable_end_; n-- > 0;) {
      const auto& L = layers_[n];
      const auto& x = trace.inputs[n];
      switch (L.spec.kind) {
        case LayerKind::Conv2d:
          g = conv2d_backward(x, L.conv2d, g, grads[slot[n]], L.conv2d.bias.empty() ? nullptr : &grads[slot[n] + 1]);
          break;
        case LayerKind::Conv3d:
          g = conv3d_backward(x, L.conv3d, g, grads[slot[n]], L.conv3d.bias.empty() ? nullptr : &grads[slot[n] + 1]);
          break;
        case LayerKind::Fc:
          g = fc_backward(x, L.fc, g, grads[slot[n]], L.fc.bias.empty() ? nullptr : &grads[slot[n] + 1]);
          break;
        case LayerKind::BatchNorm:
          g = batchnorm_backward(x, L.bn, g, grads[slot[n]], grads[slot[n] + 1]);
          break;
        case LayerKind::ReLU:
          g = relu_backward(x, std::move(g));
          break;
        case LayerKind::AvgPool2d:
          g = avgpool_backward(x, L.spec.kh, L.spec.stride_h, L.spec.pad, g);
          break;
        case LayerKind::GlobalAvgPool:
          g = avgpool_backward(x, x.rows(), 1, 0, g);
          break;
        case LayerKind::CollapseSpectral:
          g = std::move(g).reshaped(x.dims());
          break;
        case LayerKind::ResidualEnd: {
          const auto& skip = trace.inputs[L.partner];
          const std::size_t top = (skip.rows() - g.rows()) / 2, left = (skip.cols() - g.cols()) / 2;
          pending[L.partner] = pad_zero(g, top, skip.rows() - g.rows() - top, left, skip.cols() - g.cols() - left);
          break;
        }
        case LayerKind::ResidualBegin:
          g = add(g, pending[n]);
          break;
        case LayerKind::Softmax:
          throw ValidationError(
              detail::concat("layer '", L.spec.id, "' (Softmax) is not differentiable outside the loss head"));
      }
    }
  }

  /// Copies the current parameters back into a graph (as 32-bit floats).
  NetworkGraph to_graph() const {
    NetworkGraph net = graph_;
    auto f = [](const std::vector<T>& v) { return std::vector<float>(v.begin(), v.end()); };
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      auto& s = net.layers[i];
      const auto& L = layers_[i];
      switch (s.kind) {
        case LayerKind::Conv2d: s.weights = f(L.conv2d.weights), s.bias = f(L.conv2d.bias); break;
        case LayerKind::Conv3d: s.weights = f(L.conv3d.weights), s.bias = f(L.conv3d.bias); break;
        case LayerKind::Fc: s.weights = f(L.fc.weights), s.bias = f(L.fc.bias); break;
        case LayerKind::BatchNorm:
          s.gamma = f(L.bn.gamma), s.beta = f(L.bn.beta);
          s.running_mean = f(L.bn.running_mean), s.running_var = f(L.bn.running_var);
          break;
        default: break;
      }
    }
    return net;
  }

 private:
  BasicTensor<T> apply(std::size_t i, BasicTensor<T> x, std::vector<BasicTensor<T>>& skips,
                       const KernelOptions& opts) const {
    const auto& L = layers_[i];
    switch (L.spec.kind) {
      case LayerKind::Conv2d: return conv2d(x, L.conv2d, opts);
      case LayerKind::Conv3d: return conv3d(x, L.conv3d, opts);
      case LayerKind::BatchNorm: return batchnorm_infer(x, L.bn);
      case LayerKind::ReLU: return relu(std::move(x));
      case LayerKind::AvgPool2d: return avgpool2d_sliding(x, L.spec.kh, L.spec.stride_h, L.spec.pad, opts);
      case LayerKind::GlobalAvgPool: return global_avgpool(x, opts);
      case LayerKind::CollapseSpectral: return collapse_spectral(std::move(x));
      case LayerKind::Fc: return fc(x, L.fc, opts);
      case LayerKind::Softmax: return softmax(std::move(x));
      case LayerKind::ResidualBegin:
        skips.push_back(x);
        return x;
      case LayerKind::ResidualEnd: {
        BasicTensor<T> skip = std::move(skips.back());
        skips.pop_back();
        if (skip.dims() != x.dims()) {
          const std::size_t top = (skip.rows() - x.rows()) / 2, left = (skip.cols() - x.cols()) / 2;
          skip = crop(skip, top, left, x.rows(), x.cols());
        }
        return add(x, skip);
      }
    }
    return x;
  }

  NetworkGraph graph_;
  std::vector<Layer> layers_;
  std::size_t differentiable_end_ = 0;
};

}  // namespace tppi
