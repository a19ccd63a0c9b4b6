// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tppi/engine.hpp"
#include "tppi/flops.hpp"
#include "tppi/presets.hpp"
#include "tppi/trainer.hpp"

namespace tppi {

struct TimingStats {
  double median = 0.0, min = 0.0, max = 0.0;
  std::vector<double> samples;  // seconds, warm-up excluded
};

/// Calls fn once as warm-up, then `runs` timed times.
template <typename Fn>
TimingStats time_runs(Fn&& fn, std::size_t runs) {
  if (runs < 2) throw Error(detail::concat("timing needs at least 2 runs for a median, got ", runs));
  fn();
  TimingStats s;
  for (std::size_t i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    s.samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  auto sorted = s.samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.min = sorted.front();
  s.max = sorted.back();
  return s;
}

struct MachineInfo {
  std::size_t threads = 1;
  std::size_t hardware_concurrency = 0;
  std::string compiler;

  static MachineInfo current() {
    MachineInfo m;
    m.threads = num_threads();
    m.hardware_concurrency = std::thread::hardware_concurrency();
#if defined(__clang__)
    m.compiler = detail::concat("clang ", __clang_major__, ".", __clang_minor__);
#elif defined(__GNUC__)
    m.compiler = detail::concat("gcc ", __GNUC__, ".", __GNUC_MINOR__);
#else
    m.compiler = "unknown";
#endif
    return m;
  }
};

struct BenchOptions {
  std::size_t runs = 5;
  std::size_t batch = 100;
  bool patch = true;
  bool image = true;
  std::uint64_t seed = 0;
};

struct BenchReport {
  int schema_version = 1;
  std::size_t runs = 0;
  std::optional<TimingStats> patch, image;
  std::optional<TimingStats> patch_extraction;  // cutting the patches alone
  std::uint64_t patch_flops = 0, image_flops = 0;
  double speedup = 0.0;  // patch median / image median
  MachineInfo machine;
  std::uint64_t seed = 0;
  std::string net_id, cube_id;
};

/// Times whole-scene prediction in batched patch mode and padded image mode.
inline BenchReport bench(const NetworkGraph& net, const HsiCube& cube, BenchOptions opts = {}) {
  if (opts.runs < 2) throw Error(detail::concat("bench: --runs must be >= 2, got ", opts.runs));
  const Model<float> model(net);
  BenchReport rep;
  rep.runs = opts.runs;
  rep.machine = MachineInfo::current();
  rep.seed = opts.seed;
  rep.net_id = net.name;
  rep.cube_id = cube.name;
  const auto flops = count_flops(net, cube.height, cube.width);
  rep.patch_flops = flops.patch_total;
  rep.image_flops = flops.image_mode_valid ? flops.image_total : 0;

  PredictOptions popts;
  popts.batch = opts.batch;
  if (opts.patch) {
    rep.patch = time_runs([&] { (void)predict_patchwise(model, cube, PixelSelection::all(), popts); }, opts.runs);
    rep.patch_extraction = time_runs(
        [&] {
          float sink = 0;
          for (std::size_t r = 0; r < cube.height; ++r)
            for (std::size_t c = 0; c < cube.width; ++c) sink += extract_patch(cube, r, c, net.sample_size)[0];
          volatile float keep = sink;
          (void)keep;
        },
        opts.runs);
  }
  if (opts.image) rep.image = time_runs([&] { (void)predict_image(model, cube, true, popts); }, opts.runs);
  if (rep.patch && rep.image && rep.image->median > 0) rep.speedup = rep.patch->median / rep.image->median;
  return rep;
}

struct SweepRow {
  std::size_t m = 0;
  double patch_time = 0.0, image_time = 0.0;  // medians, seconds
  std::uint64_t patch_flops = 0, image_flops = 0;
  std::optional<double> oa;
};

struct SweepReport {
  int schema_version = 1;
  std::vector<SweepRow> rows;
  MachineInfo machine;
  std::uint64_t seed = 0;
  std::string cube_id;

  /// Fixed column order: m,patch_time_s,image_time_s,patch_flops,image_flops,oa
  std::string csv() const {
    std::ostringstream out;
    out << "m,patch_time_s,image_time_s,patch_flops,image_flops,oa\n";
    out.precision(9);
    for (const auto& r : rows) {
      out << r.m << ',' << r.patch_time << ',' << r.image_time << ',' << r.patch_flops << ',' << r.image_flops << ',';
      if (r.oa) out << *r.oa;
      out << '\n';
    }
    return out.str();
  }
};

struct SweepOptions {
  std::vector<std::size_t> m_values = {3, 5, 7, 9};
  std::size_t runs = 5;
  std::size_t batch = 100;
  std::size_t classes = 4;  // used when no ground truth is given
  std::uint64_t seed = 0;
  std::optional<TrainConfig> train;  // train each net on the ground truth first
};

/// One compact image-to-image net per m; times both modes and, when a ground
/// truth and training config are given, reports test OA of the trained net.
inline SweepReport sweep(const HsiCube& cube, const GroundTruth* gt, const SweepOptions& opts) {
  if (opts.m_values.empty()) throw Error("sweep: empty m list");
  for (std::size_t i = 0; i < opts.m_values.size(); ++i) {
    if (opts.m_values[i] % 2 == 0) throw Error(detail::concat("sweep: m = ", opts.m_values[i], " is not odd"));
    if (i && opts.m_values[i] <= opts.m_values[i - 1]) throw Error("sweep: m values must be ascending");
  }
  SweepReport rep;
  rep.machine = MachineInfo::current();
  rep.seed = opts.seed;
  rep.cube_id = cube.name;
  const std::size_t classes = gt ? gt->num_classes : opts.classes;
  for (auto m : opts.m_values) {
    NetworkGraph net = compact_tppi(cube.bands, classes, m);
    he_initialize(net, opts.seed + m);
    SweepRow row;
    row.m = m;
    if (gt && opts.train) {
      const auto ds = split_dataset(*gt, m, {0.20, 0.16, opts.seed, true});
      net = train(net, cube, ds, *opts.train).net;
      const auto map = predict_image(net, cube, true);
      row.oa = evaluate_map(map, *gt, ds.non_test_mask()).overall_accuracy;
    }
    BenchOptions b;
    b.runs = opts.runs;
    b.batch = opts.batch;
    b.seed = opts.seed;
    const auto br = bench(net, cube, b);
    row.patch_time = br.patch->median;
    row.image_time = br.image->median;
    row.patch_flops = br.patch_flops;
    row.image_flops = br.image_flops;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace tppi
