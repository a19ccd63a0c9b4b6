// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tppi/network.hpp"

namespace tppi {

struct Rewrite {
  std::string layer_id;
  std::string rule;  // "fc_to_conv", "destride", "remove_padding", "globalpool_to_sliding"
  bool weight_preserving = false;
};

struct TransformReport {
  std::vector<Rewrite> rewrites;
  bool retrain_required = false;
  std::size_t receptive_field_before = 0;
  std::size_t receptive_field_after = 0;
};

/// Fully connected layer fed by a [C, s, s] map -> s×s valid conv.
///
/// Fc weight row o, column c·s·s + r·s + col becomes conv weight
/// [o, c, r, col]; both layouts are row-major, so the array is reused as is.
/// On an s×s input the conv visits the taps in the same order the Fc visits
/// its inputs, so the logits match bit for bit.
inline LayerSpec fc_to_conv(const LayerSpec& fc, const FeatureShape& incoming) {
  if (fc.kind != LayerKind::Fc) throw TransformError(detail::concat("fc_to_conv: layer '", fc.id, "' is not Fc"));
  if (incoming.rank != 3 || incoming.rows != incoming.cols)
    throw TransformError(detail::concat("fc_to_conv: layer '", fc.id, "' needs a square rank-3 input, got ",
                                        to_string(incoming.dims())));
  const std::size_t expected = incoming.channels * incoming.rows * incoming.cols;
  if (fc.in_features != expected)
    throw TransformError(detail::concat("fc_to_conv: layer '", fc.id, "' has ", fc.in_features,
                                        " in_features, expected C*s*s = ", expected));
  LayerSpec conv;
  conv.id = fc.id;
  conv.kind = LayerKind::Conv2d;
  conv.in_channels = incoming.channels;
  conv.out_channels = fc.out_features;
  conv.kh = conv.kw = incoming.rows;
  conv.weights = fc.weights;
  conv.bias = fc.bias;
  return conv;
}

/// Spatially strided conv -> stride 1, pad 0, same weights. The computed
/// function changes, so this rewrite is never weight preserving.
inline LayerSpec destride(const LayerSpec& layer) {
  if (!layer.spatially_strided())
    throw TransformError(detail::concat("destride: layer '", layer.id, "' is not strided"));
  LayerSpec out = layer;
  out.stride_h = out.stride_w = 1;
  out.pad = 0;
  return out;
}

/// Global average pooling over an s×s map -> s×s sliding average pool.
inline LayerSpec globalpool_to_sliding(const LayerSpec& layer, const FeatureShape& incoming) {
  if (layer.kind != LayerKind::GlobalAvgPool)
    throw TransformError(detail::concat("globalpool_to_sliding: layer '", layer.id, "' is not GlobalAvgPool"));
  if (incoming.rank != 3 || incoming.rows != incoming.cols || !incoming.rows)
    throw TransformError(detail::concat("globalpool_to_sliding: layer '", layer.id,
                                        "' has unknown or non-square incoming extent ", to_string(incoming.dims())));
  LayerSpec out;
  out.id = layer.id;
  out.kind = LayerKind::AvgPool2d;
  out.kh = out.kw = incoming.rows;
  return out;
}

/// Rewrites a pixel classifier into an image-to-image network.
///
/// Layers are rewritten in order while the shapes of the partially rewritten
/// chain are tracked on an m×m input, so pool windows and Fc kernels are sized
/// for the rewritten prefix.
inline std::pair<NetworkGraph, TransformReport> transform(const NetworkGraph& net) {
  check_graph(net);
  TransformReport report;
  report.receptive_field_before = net.sample_size;

  NetworkGraph out = net;
  out.layers.clear();
  ShapeTracker tracker(input_shape(net, net.sample_size, net.sample_size));
  std::vector<std::string> stuck;

  for (const auto& layer : net.layers) {
    LayerSpec next = layer;
    try {
      if (layer.kind == LayerKind::Fc) {
        next = fc_to_conv(layer, tracker.current());
        report.rewrites.push_back({layer.id, "fc_to_conv", true});
      } else if (layer.kind == LayerKind::GlobalAvgPool) {
        next = globalpool_to_sliding(layer, tracker.current());
        report.rewrites.push_back({layer.id, "globalpool_to_sliding", true});
      } else if (layer.spatially_strided()) {
        next = destride(layer);
        report.rewrites.push_back({layer.id, "destride", false});
      } else if (layer.spatially_padded()) {
        next.pad = 0;
        report.rewrites.push_back({layer.id, "remove_padding", false});
      }
      tracker.step(next);
    } catch (const Error& e) {
      stuck.push_back(detail::concat(layer.id, " (", to_string(layer.kind), "): ", e.what()));
      break;
    }
    out.layers.push_back(std::move(next));
  }
  if (!stuck.empty()) {
    std::string msg = "transform: untransformable layer(s):";
    for (const auto& s : stuck) msg += " " + s;
    throw TransformError(msg);
  }

  for (const auto& r : report.rewrites) report.retrain_required |= !r.weight_preserving;
  try {
    check_graph(out);
    report.receptive_field_after = receptive_field(out);
  } catch (const Error& e) {
    throw TransformError(detail::concat("transform: rewritten network is not image-to-image: ", e.what()));
  }
  return {std::move(out), std::move(report)};
}

}  // namespace tppi
