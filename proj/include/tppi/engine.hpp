// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tppi/hsi.hpp"
#include "tppi/map.hpp"
#include "tppi/model.hpp"
#include "tppi/network.hpp"
#include "tppi/parallel.hpp"

namespace tppi {

struct Pixel {
  std::size_t row = 0, col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Either every pixel of the cube or an explicit list.
struct PixelSelection {
  std::optional<std::vector<Pixel>> pixels;

  static PixelSelection all() { return {}; }
  static PixelSelection only(std::vector<Pixel> p) { return {std::move(p)}; }
  static PixelSelection labeled(const GroundTruth& gt) {
    std::vector<Pixel> p;
    for (std::size_t r = 0; r < gt.height; ++r)
      for (std::size_t c = 0; c < gt.width; ++c)
        if (gt.at(r, c)) p.push_back({r, c});
    return {std::move(p)};
  }
};

struct PredictOptions {
  KernelOptions kernel;
  bool retain_logits = false;
  std::size_t batch = 100;  // patches grouped per work item in patch mode
};

class TppiViolationError : public ValidationError {
 public:
  explicit TppiViolationError(std::vector<Violation> v)
      : ValidationError(describe(v)), violations(std::move(v)) {}
  std::vector<Violation> violations;

 private:
  static std::string describe(const std::vector<Violation>& v) {
    std::string s = "network is not image-to-image:";
    for (const auto& x : v) s += detail::concat(" [rule ", x.rule, "] ", x.layer_id, ": ", x.message, ";");
    return s;
  }
};

namespace detail {

inline void check_bands(const NetworkGraph& net, const HsiCube& cube) {
  cube.validate();
  if (cube.bands != net.bands)
    throw ShapeError(concat("cube has ", cube.bands, " bands, network expects ", net.bands));
}

inline void check_image_net(const NetworkGraph& net, const HsiCube& cube) {
  check_bands(net, cube);
  if (auto v = validate_tppi(net); !v.empty()) throw TppiViolationError(std::move(v));
  if (cube.height < net.sample_size || cube.width < net.sample_size)
    throw ShapeError(concat("cube ", cube.height, "x", cube.width, " is smaller than m = ", net.sample_size));
}

// Writes argmax classes (and optionally logits) of a [C, h, w] block into
// `map` at (row0, col0).
inline void scatter_block(const Tensor& out, ClassificationMap& map, std::size_t row0, std::size_t col0,
                          bool logits) {
  const std::size_t C = out.channels(), h = out.rows(), w = out.cols();
  const std::size_t plane = h * w;
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t p = r * w + c;
      const std::size_t dst = (row0 + r) * map.width + col0 + c;
      map.class_of[dst] = static_cast<std::uint16_t>(argmax_lowest(out.data().begin() + static_cast<long>(p), C, plane) + 1);
      if (logits)
        for (std::size_t k = 0; k < C; ++k) map.logits[k * map.height * map.width + dst] = out[k * plane + p];
    }
}

inline ClassificationMap blank_map(std::size_t h, std::size_t w, std::size_t classes, bool logits, PredictMode mode,
                                   bool padded, const std::string& net_id) {
  ClassificationMap map;
  map.height = h;
  map.width = w;
  map.num_classes = classes;
  map.class_of.assign(h * w, 0);
  if (logits) map.logits.assign(classes * h * w, 0.0f);
  map.provenance = {mode, padded, net_id};
  return map;
}

inline std::size_t half_window(const NetworkGraph& net) {
  if (net.sample_size % 2 == 0)
    throw ValidationError(concat("patch size m = ", net.sample_size,
                                 " is even; patches are centred on a pixel, so m must be odd"));
  return net.sample_size / 2;
}

}  // namespace detail

/// Pixel-by-pixel prediction: every requested pixel's mirror-padded m×m
/// neighbourhood is pushed through the net on its own. Works for both pixel
/// classifiers and image-to-image nets.
inline ClassificationMap predict_patchwise(const Model<float>& model, const HsiCube& cube,
                                           const PixelSelection& selection = {}, PredictOptions opts = {}) {
  const auto& net = model.structure();
  detail::check_bands(net, cube);
  detail::half_window(net);
  const std::size_t m = net.sample_size;

  std::vector<Pixel> pixels;
  if (selection.pixels) {
    pixels = *selection.pixels;
  } else {
    pixels.reserve(cube.height * cube.width);
    for (std::size_t r = 0; r < cube.height; ++r)
      for (std::size_t c = 0; c < cube.width; ++c) pixels.push_back({r, c});
  }
  auto map = detail::blank_map(cube.height, cube.width, net.num_classes, opts.retain_logits, PredictMode::patch,
                               true, net.name);
  const std::size_t batch = std::max<std::size_t>(1, opts.batch);
  const std::size_t groups = (pixels.size() + batch - 1) / batch;
  parallel_for(0, groups, [&](std::size_t g) {
    const std::size_t end = std::min(pixels.size(), (g + 1) * batch);
    for (std::size_t i = g * batch; i < end; ++i) {
      const auto [r, c] = pixels[i];
      if (r >= cube.height || c >= cube.width) throw ShapeError("predict_patchwise: pixel outside the cube");
      const Tensor out = model.forward(model.wrap_input(extract_patch(cube, r, c, m)), opts.kernel);
      if (out.rows() != 1 || out.cols() != 1)
        throw ShapeError(detail::concat("predict_patchwise: m x m patch produced ", out.rows(), "x", out.cols()));
      detail::scatter_block(out, map, r, c, opts.retain_logits);
    }
  });
  return map;
}

inline ClassificationMap predict_patchwise(const NetworkGraph& net, const HsiCube& cube,
                                           const PixelSelection& selection = {}, PredictOptions opts = {}) {
  return predict_patchwise(Model<float>(net), cube, selection, opts);
}

/// Whole-image fully convolutional prediction. Without padding the map is
/// (H−m+1)×(W−m+1); with pad_to_full the cube is mirror padded by (m−1)/2 on
/// every side first, giving an H×W map.
inline ClassificationMap predict_image(const Model<float>& model, const HsiCube& cube, bool pad_to_full,
                                       PredictOptions opts = {}) {
  const auto& net = model.structure();
  detail::check_image_net(net, cube);
  const std::size_t half = detail::half_window(net);
  Tensor input = cube.tensor();
  if (pad_to_full && half) input = pad_mirror(input, half, half, half, half);
  const Tensor out = model.forward(model.wrap_input(std::move(input)), opts.kernel);
  auto map = detail::blank_map(out.rows(), out.cols(), net.num_classes, opts.retain_logits, PredictMode::image,
                               pad_to_full, net.name);
  detail::scatter_block(out, map, 0, 0, opts.retain_logits);
  return map;
}

inline ClassificationMap predict_image(const NetworkGraph& net, const HsiCube& cube, bool pad_to_full,
                                       PredictOptions opts = {}) {
  return predict_image(Model<float>(net), cube, pad_to_full, opts);
}

/// predict_image in bounded memory: tile×tile input windows overlapping by
/// m−1, each producing a (tile−m+1)² block of the output. The stitched map is
/// identical to predict_image.
inline ClassificationMap predict_tiled(const Model<float>& model, const HsiCube& cube, std::size_t tile,
                                       bool pad_to_full = false, PredictOptions opts = {}) {
  const auto& net = model.structure();
  detail::check_image_net(net, cube);
  const std::size_t m = net.sample_size;
  const std::size_t half = detail::half_window(net);
  if (tile < m) throw ShapeError(detail::concat("tile ", tile, " is smaller than m = ", m));

  Tensor input = cube.tensor();
  if (pad_to_full && half) input = pad_mirror(input, half, half, half, half);
  const std::size_t H = input.rows(), W = input.cols();
  auto map = detail::blank_map(H - m + 1, W - m + 1, net.num_classes, opts.retain_logits, PredictMode::tiled,
                               pad_to_full, net.name);

  auto starts = [&](std::size_t extent, std::size_t t) {
    std::vector<std::size_t> s;
    const std::size_t step = t - m + 1;
    for (std::size_t p = 0;; p += step) {
      if (p + t >= extent) {
        s.push_back(extent - t);
        break;
      }
      s.push_back(p);
    }
    return s;
  };
  const std::size_t th = std::min(tile, H), tw = std::min(tile, W);
  const auto rows = starts(H, th), cols = starts(W, tw);
  for (auto r0 : rows)
    for (auto c0 : cols) {
      const Tensor out = model.forward(model.wrap_input(crop(input, r0, c0, th, tw)), opts.kernel);
      detail::scatter_block(out, map, r0, c0, opts.retain_logits);
    }
  return map;
}

inline ClassificationMap predict_tiled(const NetworkGraph& net, const HsiCube& cube, std::size_t tile,
                                       bool pad_to_full = false, PredictOptions opts = {}) {
  return predict_tiled(Model<float>(net), cube, tile, pad_to_full, opts);
}

// ---------------------------------------------------------------------------

struct EquivalenceReport {
  double max_abs_logit_diff = 0.0;
  std::size_t argmax_disagreements = 0;
  std::vector<Pixel> disagreeing_pixels;  // first kDisagreementCap
  std::size_t pixels_compared = 0;
  std::size_t logits_beyond_tolerance = 0;
  /// Smallest top-1/top-2 logit margin (image mode) among disagreeing pixels.
  double min_margin_at_disagreement = 0.0;
  double tolerance = 0.0;

  static constexpr std::size_t kDisagreementCap = 64;

  bool equivalent() const { return argmax_disagreements == 0; }
};

/// Runs both prediction regimes over every pixel and compares them: the
/// patch-by-patch classifier and the padded whole-image pass.
inline EquivalenceReport verify_equivalence(const NetworkGraph& net, const HsiCube& cube, double tolerance = 0.0,
                                            KernelOptions image_kernel = {}, KernelOptions patch_kernel = {}) {
  const Model<float> model(net);
  const auto image = predict_image(model, cube, true, {image_kernel, true, 100});
  const auto patch = predict_patchwise(model, cube, PixelSelection::all(), {patch_kernel, true, 100});

  EquivalenceReport rep;
  rep.tolerance = tolerance;
  rep.pixels_compared = cube.height * cube.width;
  const std::size_t C = net.num_classes;
  for (std::size_t r = 0; r < cube.height; ++r)
    for (std::size_t c = 0; c < cube.width; ++c) {
      for (std::size_t k = 0; k < C; ++k) {
        const double d = std::abs(double(image.logit(k, r, c)) - double(patch.logit(k, r, c)));
        rep.max_abs_logit_diff = std::max(rep.max_abs_logit_diff, d);
        if (d > tolerance) ++rep.logits_beyond_tolerance;
      }
      if (image.at(r, c) != patch.at(r, c)) {
        std::vector<float> v(C);
        for (std::size_t k = 0; k < C; ++k) v[k] = image.logit(k, r, c);
        std::partial_sort(v.begin(), v.begin() + std::min<std::size_t>(2, C), v.end(), std::greater<>());
        const double margin = C > 1 ? double(v[0]) - double(v[1]) : 0.0;
        rep.min_margin_at_disagreement =
            rep.argmax_disagreements ? std::min(rep.min_margin_at_disagreement, margin) : margin;
        if (rep.disagreeing_pixels.size() < EquivalenceReport::kDisagreementCap) rep.disagreeing_pixels.push_back({r, c});
        ++rep.argmax_disagreements;
      }
    }
  return rep;
}

// ---------------------------------------------------------------------------

/// Confusion matrix (rows = truth, cols = prediction, classes 1..C mapped to
/// 0..C-1) with the derived accuracy figures.
struct MetricsReport {
  std::size_t num_classes = 0;
  std::vector<std::uint64_t> confusion;
  std::uint64_t total = 0;
  double overall_accuracy = 0.0;
  double average_accuracy = 0.0;
  double kappa = 0.0;
  std::vector<double> per_class_recall;  // NaN for classes without support

  std::uint64_t at(std::size_t truth, std::size_t pred) const { return confusion[truth * num_classes + pred]; }
};

/// OA = trace / total; AA = mean recall over classes with support;
/// Kappa = (p_o − p_e) / (1 − p_e) with p_e = Σ row_k·col_k / total².
inline MetricsReport metrics_from_confusion(std::size_t classes, std::vector<std::uint64_t> confusion) {
  if (confusion.size() != classes * classes) throw ShapeError("confusion matrix must be C x C");
  MetricsReport rep;
  rep.num_classes = classes;
  rep.confusion = std::move(confusion);
  std::vector<std::uint64_t> row(classes, 0), col(classes, 0);
  std::uint64_t diag = 0;
  for (std::size_t t = 0; t < classes; ++t)
    for (std::size_t p = 0; p < classes; ++p) {
      const auto v = rep.at(t, p);
      row[t] += v;
      col[p] += v;
      rep.total += v;
      if (t == p) diag += v;
    }
  if (!rep.total) throw Error("metrics: no pixels to evaluate");
  const double n = double(rep.total);
  rep.overall_accuracy = double(diag) / n;
  double recall_sum = 0;
  std::size_t supported = 0;
  rep.per_class_recall.assign(classes, std::nan(""));
  for (std::size_t k = 0; k < classes; ++k) {
    if (!row[k]) continue;
    rep.per_class_recall[k] = double(rep.at(k, k)) / double(row[k]);
    recall_sum += rep.per_class_recall[k];
    ++supported;
  }
  rep.average_accuracy = recall_sum / double(supported);
  double pe = 0;
  for (std::size_t k = 0; k < classes; ++k) pe += double(row[k]) * double(col[k]);
  pe /= n * n;
  rep.kappa = pe >= 1.0 ? 1.0 : (rep.overall_accuracy - pe) / (1.0 - pe);
  return rep;
}

/// Scores a map against ground truth over labeled pixels that are not
/// excluded (exclude, when non-empty, is an H×W mask; true = skip).
inline MetricsReport evaluate_map(const ClassificationMap& map, const GroundTruth& gt,
                                  const std::vector<bool>& exclude = {}) {
  if (map.height != gt.height || map.width != gt.width)
    throw ShapeError(detail::concat("map ", map.height, "x", map.width, " vs ground truth ", gt.height, "x", gt.width));
  if (!exclude.empty() && exclude.size() != gt.labels.size()) throw ShapeError("exclude mask size mismatch");
  const std::size_t C = std::max(gt.num_classes, map.num_classes);
  std::vector<std::uint64_t> confusion(C * C, 0);
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const auto truth = gt.labels[i];
    if (!truth || (!exclude.empty() && exclude[i])) continue;
    const auto pred = map.class_of[i];
    if (!pred || pred > C) throw Error(detail::concat("metrics: pixel ", i, " has no valid prediction"));
    ++confusion[(truth - 1) * C + (pred - 1)];
  }
  return metrics_from_confusion(C, std::move(confusion));
}

}  // namespace tppi
