// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tppi/error.hpp"
#include "tppi/tensor.hpp"

namespace tppi {

enum class LayerKind {
  Conv2d,
  Conv3d,
  BatchNorm,
  ReLU,
  AvgPool2d,
  GlobalAvgPool,
  CollapseSpectral,
  Fc,
  ResidualBegin,
  ResidualEnd,
  Softmax,
};

inline constexpr LayerKind kAllLayerKinds[] = {
    LayerKind::Conv2d,        LayerKind::Conv3d,           LayerKind::BatchNorm, LayerKind::ReLU,
    LayerKind::AvgPool2d,     LayerKind::GlobalAvgPool,    LayerKind::CollapseSpectral,
    LayerKind::Fc,            LayerKind::ResidualBegin,    LayerKind::ResidualEnd, LayerKind::Softmax,
};

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "Conv2d";
    case LayerKind::Conv3d: return "Conv3d";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::AvgPool2d: return "AvgPool2d";
    case LayerKind::GlobalAvgPool: return "GlobalAvgPool";
    case LayerKind::CollapseSpectral: return "CollapseSpectral";
    case LayerKind::Fc: return "Fc";
    case LayerKind::ResidualBegin: return "ResidualBegin";
    case LayerKind::ResidualEnd: return "ResidualEnd";
    case LayerKind::Softmax: return "Softmax";
  }
  return "?";
}

inline std::optional<LayerKind> layer_kind_from_string(std::string_view s) {
  for (auto k : kAllLayerKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline bool is_conv(LayerKind k) { return k == LayerKind::Conv2d || k == LayerKind::Conv3d; }

inline bool is_parametric(LayerKind k) {
  return is_conv(k) || k == LayerKind::Fc || k == LayerKind::BatchNorm;
}

/// One layer of a network graph. Only the fields relevant to `kind` are
/// meaningful; the rest keep their defaults.
///
/// Conv2d uses in/out channels, kh, kw, stride_h/w and pad (spatial).
/// Conv3d additionally uses kd, stride_d and pad_d. AvgPool2d uses kh (== kw),
/// stride_h/w and pad. Fc uses in/out features. BatchNorm uses channels
/// (in_channels) and epsilon.
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::ReLU;

  std::size_t in_channels = 0, out_channels = 0;
  std::size_t kd = 1, kh = 1, kw = 1;
  std::size_t stride_d = 1, stride_h = 1, stride_w = 1;
  std::size_t pad_d = 0, pad = 0;
  std::size_t in_features = 0, out_features = 0;
  float epsilon = 1e-5f;

  // Conv/Fc: weights [out, in, (kd), kh, kw] / [out, in]; bias [out] or empty.
  std::vector<float> weights, bias;
  // BatchNorm.
  std::vector<float> gamma, beta, running_mean, running_var;

  bool has_weights() const {
    if (kind == LayerKind::BatchNorm) return !gamma.empty();
    return !weights.empty();
  }

  std::size_t weight_count() const {
    switch (kind) {
      case LayerKind::Conv2d: return out_channels * in_channels * kh * kw;
      case LayerKind::Conv3d: return out_channels * in_channels * kd * kh * kw;
      case LayerKind::Fc: return out_features * in_features;
      default: return 0;
    }
  }

  bool spatially_strided() const {
    return (kind == LayerKind::Conv2d || kind == LayerKind::Conv3d || kind == LayerKind::AvgPool2d) &&
           (stride_h > 1 || stride_w > 1);
  }

  bool spatially_padded() const {
    return (kind == LayerKind::Conv2d || kind == LayerKind::Conv3d || kind == LayerKind::AvgPool2d) && pad > 0;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Layer chain with matched residual markers. `rank` 4 feeds the cube as
/// [1, bands, rows, cols]; rank 3 feeds it as [bands, rows, cols].
struct NetworkGraph {
  std::string name;
  std::size_t bands = 1;
  std::size_t sample_size = 1;  // m
  std::size_t rank = 3;
  std::size_t num_classes = 1;
  std::vector<LayerSpec> layers;

  const LayerSpec* find(std::string_view id) const {
    for (const auto& l : layers)
      if (l.id == id) return &l;
    return nullptr;
  }

  friend bool operator==(const NetworkGraph&, const NetworkGraph&) = default;
};

/// Shape of a feature map flowing between layers; spectral is 0 for rank 3.
struct FeatureShape {
  std::size_t rank = 3;
  std::size_t channels = 1, spectral = 0, rows = 1, cols = 1;

  Dims dims() const {
    return rank == 4 ? Dims{channels, spectral, rows, cols} : Dims{channels, rows, cols};
  }
  std::size_t size() const { return channels * (rank == 4 ? spectral : 1) * rows * cols; }

  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

inline FeatureShape input_shape(const NetworkGraph& net, std::size_t rows, std::size_t cols) {
  return net.rank == 4 ? FeatureShape{4, 1, net.bands, rows, cols} : FeatureShape{3, net.bands, 0, rows, cols};
}

struct LayerShape {
  std::string id;
  LayerKind kind;
  FeatureShape in, out;
};

struct ShapeReport {
  std::vector<LayerShape> layers;
  FeatureShape input, output;
  std::size_t shrink_h = 0, shrink_w = 0;
};

/// Walks a layer chain one layer at a time, tracking the residual stack.
class ShapeTracker {
 public:
  explicit ShapeTracker(FeatureShape input) : current_(input) {}

  const FeatureShape& current() const { return current_; }
  std::size_t open_residuals() const { return skips_.size(); }

  FeatureShape step(const LayerSpec& l) {
    auto fail = [&](auto&&... msg) -> ShapeError {
      return ShapeError(detail::concat("layer '", l.id, "' (", to_string(l.kind), "): ", msg...));
    };
    auto spatial = [&](std::size_t in, std::size_t k, std::size_t stride, std::size_t pad, const char* axis) {
      if (in + 2 * pad < k)
        throw fail("input smaller than receptive field on ", axis, " axis (", in + 2 * pad, " < ", k, ")");
      return (in + 2 * pad - k) / stride + 1;
    };
    auto need_rank = [&](std::size_t r) {
      if (current_.rank != r) throw fail("expects a rank-", r, " input, got rank ", current_.rank);
    };
    auto positive = [&](std::initializer_list<std::size_t> vals) {
      for (auto v : vals)
        if (v == 0) throw fail("kernel sizes, strides and channel counts must be positive");
    };

    FeatureShape s = current_;
    switch (l.kind) {
      case LayerKind::Conv2d:
        need_rank(3);
        positive({l.in_channels, l.out_channels, l.kh, l.kw, l.stride_h, l.stride_w});
        if (s.channels != l.in_channels)
          throw fail("channel mismatch, input has ", s.channels, ", layer expects ", l.in_channels);
        s.channels = l.out_channels;
        s.rows = spatial(s.rows, l.kh, l.stride_h, l.pad, "row");
        s.cols = spatial(s.cols, l.kw, l.stride_w, l.pad, "col");
        break;
      case LayerKind::Conv3d:
        need_rank(4);
        positive({l.in_channels, l.out_channels, l.kd, l.kh, l.kw, l.stride_d, l.stride_h, l.stride_w});
        if (s.channels != l.in_channels)
          throw fail("channel mismatch, input has ", s.channels, ", layer expects ", l.in_channels);
        s.channels = l.out_channels;
        s.spectral = spatial(s.spectral, l.kd, l.stride_d, l.pad_d, "spectral");
        s.rows = spatial(s.rows, l.kh, l.stride_h, l.pad, "row");
        s.cols = spatial(s.cols, l.kw, l.stride_w, l.pad, "col");
        break;
      case LayerKind::BatchNorm:
        if (s.channels != l.in_channels)
          throw fail("channel mismatch, input has ", s.channels, ", layer expects ", l.in_channels);
        break;
      case LayerKind::ReLU:
      case LayerKind::Softmax:
        break;
      case LayerKind::AvgPool2d:
        need_rank(3);
        positive({l.kh, l.stride_h, l.stride_w});
        if (l.kh != l.kw) throw fail("pool window must be square");
        s.rows = spatial(s.rows, l.kh, l.stride_h, l.pad, "row");
        s.cols = spatial(s.cols, l.kw, l.stride_w, l.pad, "col");
        break;
      case LayerKind::GlobalAvgPool:
        need_rank(3);
        if (s.rows != s.cols) throw fail("global pooling needs a square plane, got ", s.rows, "x", s.cols);
        s.rows = s.cols = 1;
        break;
      case LayerKind::CollapseSpectral:
        need_rank(4);
        s = FeatureShape{3, s.channels * s.spectral, 0, s.rows, s.cols};
        break;
      case LayerKind::Fc:
        need_rank(3);
        positive({l.in_features, l.out_features});
        if (s.size() != l.in_features)
          throw fail("expects ", l.in_features, " input features, incoming ", to_string(s.dims()), " has ",
                     s.size());
        s = FeatureShape{3, l.out_features, 0, 1, 1};
        break;
      case LayerKind::ResidualBegin:
        skips_.push_back(s);
        break;
      case LayerKind::ResidualEnd: {
        if (skips_.empty()) throw fail("no matching ResidualBegin");
        const FeatureShape skip = skips_.back();
        skips_.pop_back();
        if (skip.rank != s.rank || skip.channels != s.channels || skip.spectral != s.spectral)
          throw fail("skip ", to_string(skip.dims()), " incompatible with branch ", to_string(s.dims()));
        if (skip.rows < s.rows || skip.cols < s.cols)
          throw fail("branch ", to_string(s.dims()), " larger than skip ", to_string(skip.dims()));
        break;
      }
    }
    current_ = s;
    return s;
  }

 private:
  FeatureShape current_;
  std::vector<FeatureShape> skips_;
};

/// Per-layer shapes for an input of rows × cols pixels.
inline ShapeReport shape_infer(const NetworkGraph& net, std::size_t rows, std::size_t cols) {
  ShapeReport report;
  report.input = input_shape(net, rows, cols);
  ShapeTracker tracker(report.input);
  for (const auto& l : net.layers) {
    const FeatureShape in = tracker.current();
    report.layers.push_back({l.id, l.kind, in, tracker.step(l)});
  }
  if (tracker.open_residuals())
    throw ShapeError(detail::concat("network '", net.name, "': ", tracker.open_residuals(),
                                    " ResidualBegin marker(s) never closed"));
  report.output = tracker.current();
  report.shrink_h = rows - std::min(rows, report.output.rows);
  report.shrink_w = cols - std::min(cols, report.output.cols);
  return report;
}

struct Violation {
  std::string layer_id;
  int rule = 0;  // 1: no fully connected head; 2: no spatial down-sampling
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Lists every layer that prevents image-to-image execution. Spectral
/// strides are allowed; spatial strides, spatial zero padding, global
/// pooling and Fc layers are not.
inline std::vector<Violation> validate_tppi(const NetworkGraph& net) {
  std::vector<Violation> out;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::Fc) out.push_back({l.id, 1, "fully connected layer"});
    if (l.kind == LayerKind::GlobalAvgPool) out.push_back({l.id, 2, "global pooling collapses the spatial plane"});
    if (l.spatially_strided())
      out.push_back({l.id, 2, detail::concat("spatial stride ", l.stride_h, "x", l.stride_w, " down-samples")});
    if (l.spatially_padded())
      out.push_back({l.id, 2, detail::concat("spatial padding ", l.pad, " breaks the output-size law")});
  }
  return out;
}

/// Spatial extent (rows, cols) of the receptive field of a stride-1 chain:
/// 1 + Σ(k − 1 − 2·pad). Residual branches count once since the skip path is
/// cropped to the branch.
inline std::pair<long, long> spatial_extent(const NetworkGraph& net) {
  long h = 1, w = 1;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::Conv2d || l.kind == LayerKind::Conv3d || l.kind == LayerKind::AvgPool2d) {
      h += static_cast<long>(l.kh) - 1 - 2 * static_cast<long>(l.pad);
      w += static_cast<long>(l.kw) - 1 - 2 * static_cast<long>(l.pad);
    }
  }
  return {h, w};
}

/// Receptive field m of a TPPI-valid network; throws ValidationError when the
/// net is not TPPI-valid or m disagrees with the declared sample size.
inline std::size_t receptive_field(const NetworkGraph& net) {
  if (auto v = validate_tppi(net); !v.empty())
    throw ValidationError(detail::concat("receptive_field: layer '", v.front().layer_id, "' violates rule (",
                                         v.front().rule, "): ", v.front().message));
  const auto [h, w] = spatial_extent(net);
  if (h != w) throw ValidationError(detail::concat("receptive_field: non-square field ", h, "x", w));
  if (h < 1) throw ValidationError("receptive_field: non-positive extent");
  if (static_cast<std::size_t>(h) != net.sample_size)
    throw ValidationError(detail::concat("receptive_field: computed m = ", h, " but network declares m = ",
                                         net.sample_size));
  return static_cast<std::size_t>(h);
}

/// Structural invariants: markers nested, m×m input reaches 1×1 with
/// num_classes channels, weights (when present) sized to the layer.
inline void check_graph(const NetworkGraph& net) {
  if (net.rank != 3 && net.rank != 4) throw ValidationError(detail::concat("rank must be 3 or 4, got ", net.rank));
  if (!net.bands || !net.sample_size || !net.num_classes)
    throw ValidationError("bands, sample size and class count must be positive");
  for (const auto& l : net.layers) {
    if (!l.has_weights()) continue;
    if (l.kind == LayerKind::BatchNorm) {
      const std::size_t c = l.in_channels;
      if (l.gamma.size() != c || l.beta.size() != c || l.running_mean.size() != c || l.running_var.size() != c)
        throw ValidationError(detail::concat("layer '", l.id, "': batchnorm arrays must have ", c, " entries"));
      continue;
    }
    if (l.weights.size() != l.weight_count())
      throw ValidationError(detail::concat("layer '", l.id, "': expected ", l.weight_count(), " values, found ",
                                           l.weights.size()));
    const std::size_t outs = l.kind == LayerKind::Fc ? l.out_features : l.out_channels;
    if (!l.bias.empty() && l.bias.size() != outs)
      throw ValidationError(detail::concat("layer '", l.id, "': expected ", outs, " bias values, found ",
                                           l.bias.size()));
  }
  const auto report = shape_infer(net, net.sample_size, net.sample_size);
  if (report.output.rows != 1 || report.output.cols != 1)
    throw ValidationError(detail::concat("network '", net.name, "': m = ", net.sample_size, " input yields ",
                                         report.output.rows, "x", report.output.cols, ", expected 1x1"));
  if (report.output.rank != 3 || report.output.channels != net.num_classes)
    throw ValidationError(detail::concat("network '", net.name, "': final feature count ",
                                         report.output.channels, " != num_classes ", net.num_classes));
}

}  // namespace tppi
