// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// JSON encodings of every report the command line tool emits. Each document
// carries a schema_version.

#include <cmath>

#include "json.hpp"
#include "tppi/bench.hpp"
#include "tppi/engine.hpp"
#include "tppi/flops.hpp"
#include "tppi/trainer.hpp"
#include "tppi/transform.hpp"

namespace tppi {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json timing_json(const TimingStats& t) {
  return {{"median_s", t.median}, {"min_s", t.min}, {"max_s", t.max}, {"samples_s", t.samples}};
}

inline nlohmann::json machine_json(const MachineInfo& m) {
  return {{"threads", m.threads}, {"hardware_concurrency", m.hardware_concurrency}, {"compiler", m.compiler}};
}

}  // namespace detail

inline nlohmann::json to_json(const TransformReport& r) {
  nlohmann::json rewrites = nlohmann::json::array();
  for (const auto& w : r.rewrites)
    rewrites.push_back({{"layer_id", w.layer_id}, {"rule", w.rule}, {"weight_preserving", w.weight_preserving}});
  return {{"schema_version", kReportSchemaVersion},
          {"rewrites", rewrites},
          {"retrain_required", r.retrain_required},
          {"receptive_field_before", r.receptive_field_before},
          {"receptive_field_after", r.receptive_field_after}};
}

inline nlohmann::json to_json(const FlopsReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : r.layers) {
    nlohmann::json j = {{"id", l.id}, {"kind", std::string(to_string(l.kind))}};
    if (l.counted()) {
      j["macs_per_position"] = l.macs_per_position;
      j["spectral_positions"] = l.spectral_positions;
      j["image_macs"] = l.image_macs;
      j["patch_macs_per_pixel"] = l.patch_macs_per_pixel;
      j["patch_macs"] = l.patch_macs;
      j["exact_image_macs"] = l.exact_image_macs;
      j["exact_patch_macs_per_pixel"] = l.exact_patch_macs_per_pixel;
      j["image_formula"] = l.image_formula;
      j["patch_pixel_formula"] = l.patch_pixel_formula;
      j["patch_formula"] = l.patch_formula;
      j["ratio"] = l.image_macs ? double(l.patch_macs) / double(l.image_macs) : 0.0;
    } else {
      j["elementwise_ops_per_position"] = l.elementwise_ops_per_position;
    }
    layers.push_back(std::move(j));
  }
  return {{"schema_version", kReportSchemaVersion},
          {"height", r.height},
          {"width", r.width},
          {"m", r.m},
          {"m_squared", r.m * r.m},
          {"multiply_add_as_two", r.multiply_add_as_two},
          {"image_mode_valid", r.image_mode_valid},
          {"layers", layers},
          {"image_total", r.image_total},
          {"patch_total", r.patch_total},
          {"image_elementwise", r.image_elementwise},
          {"patch_elementwise", r.patch_elementwise},
          {"ratio", r.ratio()},
          {"ratio_is_m_squared", r.ratio_is_m_squared()}};
}

inline nlohmann::json to_json(const EquivalenceReport& r) {
  nlohmann::json px = nlohmann::json::array();
  for (const auto& p : r.disagreeing_pixels) px.push_back({p.row, p.col});
  return {{"schema_version", kReportSchemaVersion},
          {"max_abs_logit_diff", r.max_abs_logit_diff},
          {"argmax_disagreements", r.argmax_disagreements},
          {"disagreeing_pixels", px},
          {"pixels_compared", r.pixels_compared},
          {"logits_beyond_tolerance", r.logits_beyond_tolerance},
          {"tolerance", r.tolerance},
          {"equivalent", r.equivalent()}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json recall = nlohmann::json::array();
  for (double v : r.per_class_recall) recall.push_back(detail::number_or_null(v));
  nlohmann::json confusion = nlohmann::json::array();
  for (std::size_t t = 0; t < r.num_classes; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < r.num_classes; ++p) row.push_back(r.at(t, p));
    confusion.push_back(row);
  }
  return {{"schema_version", kReportSchemaVersion},
          {"num_classes", r.num_classes},
          {"total", r.total},
          {"overall_accuracy", r.overall_accuracy},
          {"average_accuracy", r.average_accuracy},
          {"kappa", r.kappa},
          {"per_class_recall", recall},
          {"confusion", confusion}};
}

inline nlohmann::json to_json(const TrainLog& log) {
  nlohmann::json val = nlohmann::json::array();
  for (double v : log.val_oa) val.push_back(detail::number_or_null(v));
  return {{"schema_version", kReportSchemaVersion},
          {"initial_loss", log.initial_loss},
          {"epoch_loss", log.epoch_loss},
          {"val_oa", val},
          {"best_epoch", log.best_epoch},
          {"best_val_oa", detail::number_or_null(log.best_val_oa)},
          {"wall_seconds", log.wall_seconds},
          {"notes", log.notes}};
}

inline nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json modes = nlohmann::json::object();
  if (r.patch) modes["patch"] = detail::timing_json(*r.patch);
  if (r.image) modes["image"] = detail::timing_json(*r.image);
  nlohmann::json j = {{"schema_version", r.schema_version},
                      {"runs", r.runs},
                      {"modes", modes},
                      {"patch_flops", r.patch_flops},
                      {"image_flops", r.image_flops},
                      {"speedup", r.speedup},
                      {"machine", detail::machine_json(r.machine)},
                      {"seed", r.seed},
                      {"net_id", r.net_id},
                      {"cube_id", r.cube_id}};
  j["patch_extraction"] = r.patch_extraction ? detail::timing_json(*r.patch_extraction) : nlohmann::json();
  return j;
}

inline nlohmann::json to_json(const SweepReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"m", row.m},
                    {"patch_time_s", row.patch_time},
                    {"image_time_s", row.image_time},
                    {"patch_flops", row.patch_flops},
                    {"image_flops", row.image_flops},
                    {"oa", row.oa ? nlohmann::json(*row.oa) : nlohmann::json()}});
  return {{"schema_version", r.schema_version},
          {"rows", rows},
          {"machine", detail::machine_json(r.machine)},
          {"seed", r.seed},
          {"cube_id", r.cube_id}};
}

}  // namespace tppi
