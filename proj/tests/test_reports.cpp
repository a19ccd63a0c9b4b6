// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

// Report schemas are frozen in tests/golden: each golden file mirrors the
// report with every leaf replaced by its JSON type name.

#include <gtest/gtest.h>

#include <fstream>

#include "tppi/tppi.hpp"

using namespace tppi;
using nlohmann::json;

namespace {

json shape_of(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = shape_of(v);
    return out;
  }
  if (j.is_array()) return j.empty() ? json::array() : json::array({shape_of(j.front())});
  if (j.is_number()) return "number";
  if (j.is_boolean()) return "boolean";
  if (j.is_string()) return "string";
  return "null";
}

json golden(const std::string& name) {
  std::ifstream in(std::string(TPPI_GOLDEN_DIR) + "/" + name);
  EXPECT_TRUE(in.good()) << name;
  return json::parse(in);
}

void expect_schema(const json& report, const std::string& name) {
  EXPECT_EQ(report.at("schema_version"), 1);
  EXPECT_EQ(shape_of(report), golden(name)) << shape_of(report).dump(2);
}

SyntheticScene small_scene() {
  SceneSpec s;
  s.height = 12, s.width = 12, s.bands = 4, s.classes = 3;
  return gen_synthetic(s);
}

}  // namespace

TEST(ReportSchema, Transform) {
  auto net = ssrn_like(20, 5);
  expect_schema(to_json(transform(net).second), "transform_report.json");
}

TEST(ReportSchema, Flops) {
  expect_schema(to_json(count_flops(compact_tppi(8, 4, 5, 2, 3), 16, 16)), "flops_report.json");
}

TEST(ReportSchema, Equivalence) {
  const auto scene = small_scene();
  auto net = compact_tppi(4, 3, 3, 2, 3);
  he_initialize(net, 1);
  expect_schema(to_json(verify_equivalence(net, scene.cube)), "equivalence_report.json");
}

TEST(ReportSchema, Metrics) {
  expect_schema(to_json(metrics_from_confusion(2, {3, 1, 0, 4})), "metrics_report.json");
}

TEST(ReportSchema, TrainLog) {
  const auto scene = small_scene();
  const auto ds = split_dataset(scene.gt, 3, {0.2, 0.16, 1, true});
  TrainConfig cfg;
  cfg.epochs = 1;
  expect_schema(to_json(train(compact_tppi(4, 3, 3, 2, 3), scene.cube, ds, cfg).log), "train_log.json");
}

TEST(ReportSchema, Bench) {
  const auto scene = small_scene();
  auto net = compact_tppi(4, 3, 3, 2, 3);
  he_initialize(net, 1);
  BenchOptions o;
  o.runs = 2;
  const auto rep = to_json(bench(net, scene.cube, o));
  expect_schema(rep, "bench_report.json");
  EXPECT_GT(rep["modes"]["image"]["median_s"].get<double>(), 0.0);
}

TEST(ReportSchema, Sweep) {
  const auto scene = small_scene();
  SweepOptions o;
  o.m_values = {3, 5};
  o.runs = 2;
  const auto rep = sweep(scene.cube, nullptr, o);
  expect_schema(to_json(rep), "sweep_report.json");
  const auto csv = rep.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "m,patch_time_s,image_time_s,patch_flops,image_flops,oa");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(ReportSchema, SweepRejectsBadMList) {
  const auto scene = small_scene();
  SweepOptions o;
  o.m_values = {5, 3};
  EXPECT_THROW(sweep(scene.cube, nullptr, o), Error);
  o.m_values = {4};
  EXPECT_THROW(sweep(scene.cube, nullptr, o), Error);
}

TEST(Timing, NeedsTwoRuns) {
  EXPECT_THROW(time_runs([] {}, 1), Error);
  int calls = 0;
  const auto t = time_runs([&] { ++calls; }, 3);
  EXPECT_EQ(calls, 4);  // warm-up excluded from samples
  EXPECT_EQ(t.samples.size(), 3u);
  EXPECT_LE(t.min, t.median);
  EXPECT_LE(t.median, t.max);
}
