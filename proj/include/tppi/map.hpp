// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tppi/flops.hpp"

namespace tppi {

/// Per-pixel class raster produced by one of the prediction modes.
/// class_of holds 1..C (0 for pixels that were not requested); logits, when
/// retained, are stored class-major as [C, height, width].
struct ClassificationMap {
  struct Provenance {
    PredictMode mode = PredictMode::image;
    bool padded = false;
    std::string net_id;
  };

  std::size_t height = 0, width = 0, num_classes = 0;
  std::vector<std::uint16_t> class_of;
  std::vector<float> logits;
  Provenance provenance;

  bool has_logits() const { return !logits.empty(); }
  std::uint16_t at(std::size_t r, std::size_t c) const { return class_of[r * width + c]; }
  float logit(std::size_t cls, std::size_t r, std::size_t c) const {
    return logits[(cls * height + r) * width + c];
  }
};

/// Index of the largest value, lowest index on ties.
template <typename It>
std::size_t argmax_lowest(It first, std::size_t n, std::size_t stride = 1) {
  std::size_t best = 0;
  auto best_v = *first;
  for (std::size_t i = 1; i < n; ++i) {
    const auto v = *(first + static_cast<long>(i * stride));
    if (v > best_v) best_v = v, best = i;
  }
  return best;
}

}  // namespace tppi
