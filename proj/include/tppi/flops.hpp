// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tppi/network.hpp"

namespace tppi {

enum class PredictMode { patch, image, tiled };

inline const char* to_string(PredictMode m) {
  switch (m) {
    case PredictMode::patch: return "patch";
    case PredictMode::image: return "image";
    case PredictMode::tiled: return "tiled";
  }
  return "?";
}

struct FlopsOptions {
  bool multiply_add_as_two = false;  // report 2 FLOPs per MAC
};

/// Cost of one layer under the border-ignoring counting model: image mode
/// charges one output position per pixel, patch mode charges m·m positions
/// per pixel (a full patch is pushed through every layer). The exact_* fields
/// count the positions actually computed.
struct LayerFlops {
  std::string id;
  LayerKind kind = LayerKind::Conv2d;
  std::uint64_t macs_per_position = 0;  // in·kd·kh·kw·out
  std::uint64_t spectral_positions = 1;
  std::uint64_t image_macs = 0;
  std::uint64_t patch_macs_per_pixel = 0;
  std::uint64_t patch_macs = 0;
  std::uint64_t exact_image_macs = 0;
  std::uint64_t exact_patch_macs_per_pixel = 0;
  std::uint64_t elementwise_ops_per_position = 0;
  std::string image_formula, patch_pixel_formula, patch_formula;

  bool counted() const { return macs_per_position > 0; }
};

struct FlopsReport {
  std::size_t height = 0, width = 0, m = 0;
  bool multiply_add_as_two = false;
  bool image_mode_valid = false;  // the net is TPPI-valid
  std::vector<LayerFlops> layers;
  std::uint64_t image_total = 0;
  std::uint64_t patch_total = 0;
  std::uint64_t image_elementwise = 0;
  std::uint64_t patch_elementwise = 0;

  /// patch_total / image_total; m² for any stride-1 TPPI net.
  double ratio() const { return image_total ? double(patch_total) / double(image_total) : 0.0; }
  bool ratio_is_m_squared() const { return image_total && patch_total == m * m * image_total; }
  std::uint64_t headline(PredictMode mode) const { return mode == PredictMode::patch ? patch_total : image_total; }
};

namespace detail {

inline std::string product_formula(const std::string& prefix, const std::vector<std::uint64_t>& factors) {
  std::string s = prefix;
  for (auto f : factors) {
    if (!s.empty()) s += "*";
    s += std::to_string(f);
  }
  return s;
}

}  // namespace detail

/// MAC counts for predicting an image_h × image_w scene in both modes.
inline FlopsReport count_flops(const NetworkGraph& net, std::size_t image_h, std::size_t image_w,
                               FlopsOptions opts = {}) {
  FlopsReport report;
  report.height = image_h;
  report.width = image_w;
  report.m = net.sample_size;
  report.multiply_add_as_two = opts.multiply_add_as_two;
  report.image_mode_valid = validate_tppi(net).empty();

  const std::uint64_t m = net.sample_size;
  const std::uint64_t pixels = std::uint64_t(image_h) * image_w;
  const std::uint64_t scale = opts.multiply_add_as_two ? 2 : 1;
  const std::string two = opts.multiply_add_as_two ? "2" : "";

  const auto patch_shapes = shape_infer(net, net.sample_size, net.sample_size);
  std::optional<ShapeReport> image_shapes;
  if (report.image_mode_valid) image_shapes = shape_infer(net, image_h + m - 1, image_w + m - 1);

  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    const auto& out = patch_shapes.layers[i].out;
    LayerFlops f;
    f.id = l.id;
    f.kind = l.kind;

    std::vector<std::uint64_t> factors;
    if (is_conv(l.kind)) {
      f.spectral_positions = l.kind == LayerKind::Conv3d ? out.spectral : 1;
      f.macs_per_position = std::uint64_t(l.in_channels) * l.kd * l.kh * l.kw * l.out_channels * scale;
      if (f.spectral_positions != 1) factors.push_back(f.spectral_positions);
      factors.push_back(l.in_channels);
      for (std::uint64_t k : {std::uint64_t(l.kind == LayerKind::Conv3d ? l.kd : 1), std::uint64_t(l.kh),
                              std::uint64_t(l.kw)})
        if (k != 1) factors.push_back(k);
      factors.push_back(l.out_channels);
    } else if (l.kind == LayerKind::Fc) {
      f.macs_per_position = std::uint64_t(l.in_features) * l.out_features * scale;
      factors = {l.in_features, l.out_features};
    } else {
      f.elementwise_ops_per_position = out.size() / (out.rows * out.cols);
    }

    const std::uint64_t per_position = f.macs_per_position * f.spectral_positions;
    // Fc sees one position per patch; every conv is charged the full patch.
    const std::uint64_t patch_positions = l.kind == LayerKind::Fc ? 1 : m * m;
    f.image_macs = pixels * per_position;
    f.patch_macs_per_pixel = patch_positions * per_position;
    f.patch_macs = pixels * f.patch_macs_per_pixel;
    f.exact_patch_macs_per_pixel = std::uint64_t(out.rows) * out.cols * per_position;
    if (image_shapes) {
      const auto& io = image_shapes->layers[i].out;
      f.exact_image_macs = std::uint64_t(io.rows) * io.cols * per_position;
    }

    if (f.counted()) {
      f.image_formula = detail::product_formula(two.empty() ? "H*W" : "2*H*W", factors);
      std::vector<std::uint64_t> pf;
      if (patch_positions != 1) pf = {m, m};
      pf.insert(pf.end(), factors.begin(), factors.end());
      f.patch_pixel_formula = detail::product_formula(two, pf);
      f.patch_formula = detail::product_formula(two.empty() ? "H*W" : "2*H*W", pf);
      report.image_total += f.image_macs;
      report.patch_total += f.patch_macs;
    } else {
      report.image_elementwise += pixels * f.elementwise_ops_per_position;
      report.patch_elementwise += pixels * std::uint64_t(out.size());
    }
    report.layers.push_back(std::move(f));
  }
  return report;
}

}  // namespace tppi
