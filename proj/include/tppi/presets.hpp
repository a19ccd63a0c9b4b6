// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "tppi/network.hpp"

namespace tppi {

/// He (fan-in scaled normal) initialization for every parametric layer that
/// has no weights yet, or for all of them when overwrite is set. Biases and
/// batch-norm shifts start at zero, batch-norm scales and variances at one.
inline void he_initialize(NetworkGraph& net, std::uint64_t seed, bool overwrite = false) {
  std::mt19937_64 rng(seed);
  for (auto& l : net.layers) {
    if (!is_parametric(l.kind) || (l.has_weights() && !overwrite)) continue;
    if (l.kind == LayerKind::BatchNorm) {
      l.gamma.assign(l.in_channels, 1.0f);
      l.beta.assign(l.in_channels, 0.0f);
      l.running_mean.assign(l.in_channels, 0.0f);
      l.running_var.assign(l.in_channels, 1.0f);
      continue;
    }
    const std::size_t fan_in = l.kind == LayerKind::Fc ? l.in_features : l.in_channels * l.kd * l.kh * l.kw;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in)));
    l.weights.resize(l.weight_count());
    for (auto& w : l.weights) w = static_cast<float>(dist(rng));
    l.bias.assign(l.kind == LayerKind::Fc ? l.out_features : l.out_channels, 0.0f);
  }
}

/// Appends layers with generated ids ("conv2d_3", "bn_1", ...).
class NetBuilder {
 public:
  NetBuilder(std::string name, std::size_t bands, std::size_t m, std::size_t rank, std::size_t classes) {
    net_.name = std::move(name);
    net_.bands = bands;
    net_.sample_size = m;
    net_.rank = rank;
    net_.num_classes = classes;
  }

  NetBuilder& conv2d(std::size_t in, std::size_t out, std::size_t k, std::size_t stride = 1, std::size_t pad = 0) {
    LayerSpec l = make(LayerKind::Conv2d, "conv2d");
    l.in_channels = in, l.out_channels = out, l.kh = l.kw = k;
    l.stride_h = l.stride_w = stride, l.pad = pad;
    return push(std::move(l));
  }

  NetBuilder& conv3d(std::size_t in, std::size_t out, std::size_t kd, std::size_t k, std::size_t stride_d = 1,
                     std::size_t pad_d = 0) {
    LayerSpec l = make(LayerKind::Conv3d, "conv3d");
    l.in_channels = in, l.out_channels = out, l.kd = kd, l.kh = l.kw = k;
    l.stride_d = stride_d, l.pad_d = pad_d;
    return push(std::move(l));
  }

  NetBuilder& bn(std::size_t channels) {
    LayerSpec l = make(LayerKind::BatchNorm, "bn");
    l.in_channels = l.out_channels = channels;
    return push(std::move(l));
  }

  NetBuilder& relu() { return push(make(LayerKind::ReLU, "relu")); }
  NetBuilder& collapse() { return push(make(LayerKind::CollapseSpectral, "collapse")); }
  NetBuilder& global_pool() { return push(make(LayerKind::GlobalAvgPool, "gap")); }
  NetBuilder& residual_begin() { return push(make(LayerKind::ResidualBegin, "res_begin")); }
  NetBuilder& residual_end() { return push(make(LayerKind::ResidualEnd, "res_end")); }
  NetBuilder& softmax() { return push(make(LayerKind::Softmax, "softmax")); }

  NetBuilder& avgpool(std::size_t k, std::size_t stride = 1, std::size_t pad = 0) {
    LayerSpec l = make(LayerKind::AvgPool2d, "pool");
    l.kh = l.kw = k, l.stride_h = l.stride_w = stride, l.pad = pad;
    return push(std::move(l));
  }

  NetBuilder& fc(std::size_t in, std::size_t out) {
    LayerSpec l = make(LayerKind::Fc, "fc");
    l.in_features = in, l.out_features = out;
    return push(std::move(l));
  }

  NetworkGraph build() const {
    check_graph(net_);
    return net_;
  }

 private:
  LayerSpec make(LayerKind kind, const std::string& prefix) {
    LayerSpec l;
    l.kind = kind;
    l.id = prefix + "_" + std::to_string(++counts_[static_cast<int>(kind)]);
    return l;
  }
  NetBuilder& push(LayerSpec l) {
    net_.layers.push_back(std::move(l));
    return *this;
  }

  NetworkGraph net_;
  int counts_[16] = {};
};

/// Spectral-spatial residual network analog (m = 7): a strided 1×1×7 spectral
/// stem, two spectral residual blocks, a full-depth spectral reduction, one
/// 3×3 spatial conv plus a spatial residual block, then global pooling and a
/// fully connected head. Needs bands ≥ 7.
inline NetworkGraph ssrn_like(std::size_t bands = 200, std::size_t classes = 16, std::size_t filters = 24,
                              std::size_t reduce_filters = 128) {
  if (bands < 7) throw ValidationError("ssrn_like needs at least 7 bands");
  const std::size_t spectral = (bands - 7) / 2 + 1;
  NetBuilder b("ssrn-like", bands, 7, 4, classes);
  b.conv3d(1, filters, 7, 1, 2).bn(filters).relu();
  for (int block = 0; block < 2; ++block)
    b.residual_begin()
        .conv3d(filters, filters, 7, 1, 1, 3)
        .bn(filters)
        .relu()
        .conv3d(filters, filters, 7, 1, 1, 3)
        .bn(filters)
        .residual_end()
        .relu();
  b.conv3d(filters, reduce_filters, spectral, 1).bn(reduce_filters).relu().collapse();
  b.conv2d(reduce_filters, filters, 3).bn(filters).relu();
  b.residual_begin().conv2d(filters, filters, 3).bn(filters).relu().conv2d(filters, filters, 3).bn(filters);
  b.residual_end().relu().global_pool().fc(filters, classes);
  return b.build();
}

/// Pyramidal residual network analog (m = 11): valid 3×3 convs, one residual
/// block, two stride-2 padded 3×3 convs with widening channels, global
/// pooling and a fully connected head.
inline NetworkGraph presnet_like(std::size_t bands = 200, std::size_t classes = 16) {
  NetBuilder b("presnet-like", bands, 11, 3, classes);
  b.conv2d(bands, 16, 3).bn(16).relu();
  b.residual_begin().conv2d(16, 16, 3).bn(16).relu().conv2d(16, 16, 3).bn(16).residual_end().relu();
  b.conv2d(16, 24, 3, 2, 1).bn(24).relu();
  b.conv2d(24, 32, 3, 2, 1).bn(32).relu();
  b.global_pool().fc(32, classes);
  return b.build();
}

/// Small image-to-image network for desk-scale experiments. A 3-tap spectral
/// conv feeds a collapse, then (m−1)/2 valid 3×3 convs and a 1×1 classifier.
/// Needs odd m ≥ 3 and bands ≥ 3.
inline NetworkGraph compact_tppi(std::size_t bands, std::size_t classes, std::size_t m, std::size_t spectral_filters = 8,
                                 std::size_t hidden = 8) {
  if (m < 3 || m % 2 == 0) throw ValidationError("compact_tppi needs odd m >= 3");
  if (bands < 3) throw ValidationError("compact_tppi needs at least 3 bands");
  NetBuilder b("compact-tppi-m" + std::to_string(m), bands, m, 4, classes);
  b.conv3d(1, spectral_filters, 3, 1).bn(spectral_filters).relu().collapse();
  b.conv2d(spectral_filters * (bands - 2), hidden, 3).relu();
  for (std::size_t i = 1; i < (m - 1) / 2; ++i) b.conv2d(hidden, hidden, 3).relu();
  b.conv2d(hidden, classes, 1);
  return b.build();
}

/// Random TPPI-valid network with receptive field m, drawn from conv3d,
/// conv2d, batch norm, ReLU, residual blocks and sliding average pools, with
/// random parameters attached.
inline NetworkGraph random_tppi_net(std::uint64_t seed, std::size_t bands, std::size_t classes, std::size_t m) {
  if (m % 2 == 0) throw ValidationError("random_tppi_net needs odd m");
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto coin = [&] { return pick(0, 1) == 1; };

  const bool rank4 = bands >= 3 && coin();
  NetBuilder b("random-tppi-" + std::to_string(seed), bands, m, rank4 ? 4 : 3, classes);
  std::size_t budget = m - 1;  // spatial shrink still to spend
  std::size_t channels = rank4 ? 1 : bands;

  if (rank4) {
    std::size_t depth = bands;
    const std::size_t n3 = pick(1, 2);
    for (std::size_t i = 0; i < n3; ++i) {
      const std::size_t kd = std::min<std::size_t>(depth, coin() ? 3 : 1);
      const std::size_t stride_d = depth - kd >= 2 && coin() ? 2 : 1;
      const std::size_t k = budget >= 2 && coin() ? 3 : 1;
      const std::size_t out = pick(2, 4);
      b.conv3d(channels, out, kd, k, stride_d);
      channels = out;
      depth = (depth - kd) / stride_d + 1;
      budget -= k - 1;
      if (coin()) b.bn(channels);
      b.relu();
    }
    if (coin()) {
      const std::size_t k = budget >= 2 && coin() ? 3 : 1;
      const std::size_t kd = depth >= 3 ? 3 : 1;  // odd, so padding kd/2 keeps the depth
      b.residual_begin().conv3d(channels, channels, kd, k, 1, kd / 2);
      b.bn(channels).residual_end().relu();
      budget -= k - 1;
    }
    b.collapse();
    channels *= depth;
  }

  while (budget > 0) {
    switch (pick(0, 4)) {
      case 0:
      case 1: {
        const std::size_t out = pick(2, 6);
        b.conv2d(channels, out, 3);
        channels = out;
        budget -= 2;
        if (coin()) b.bn(channels);
        b.relu();
        break;
      }
      case 2:
        b.avgpool(3);
        budget -= 2;
        break;
      case 3:
        b.residual_begin().conv2d(channels, channels, 3).relu().residual_end();
        budget -= 2;
        break;
      default: {
        const std::size_t out = pick(2, 6);
        b.conv2d(channels, out, 1).relu();
        channels = out;
        break;
      }
    }
  }
  b.conv2d(channels, classes, 1);
  if (coin()) b.softmax();

  NetworkGraph net = b.build();
  he_initialize(net, seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<float> u(-0.2f, 0.2f), var(0.5f, 2.0f);
  for (auto& l : net.layers) {
    for (auto& v : l.bias) v = u(rng);
    if (l.kind == LayerKind::BatchNorm) {
      for (auto& v : l.gamma) v = 1.0f + u(rng);
      for (auto& v : l.beta) v = u(rng);
      for (auto& v : l.running_mean) v = u(rng);
      for (auto& v : l.running_var) v = var(rng);
    }
  }
  return net;
}

}  // namespace tppi
