// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tppi/engine.hpp"
#include "tppi/hsi.hpp"
#include "tppi/model.hpp"
#include "tppi/presets.hpp"

namespace tppi {

enum class Split : std::uint8_t { train, val, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

struct DatasetEntry {
  std::size_t row = 0, col = 0;
  std::uint16_t label = 0;  // 1..C
  Split split = Split::test;
};

/// Labeled pixels with their split assignment. Patches are cut from the cube
/// on demand, so the dataset only stores coordinates.
struct LabeledDataset {
  std::size_t height = 0, width = 0, num_classes = 0, m = 1;
  std::vector<DatasetEntry> entries;
  std::vector<std::string> warnings;

  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].split == s) out.push_back(i);
    return out;
  }

  std::size_t count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [s](const auto& e) { return e.split == s; }));
  }

  /// H×W mask that is true on the pixels of the given splits.
  std::vector<bool> mask(std::initializer_list<Split> splits) const {
    std::vector<bool> out(height * width, false);
    for (const auto& e : entries)
      if (std::find(splits.begin(), splits.end(), e.split) != splits.end()) out[e.row * width + e.col] = true;
    return out;
  }

  /// Pixels that prediction-phase scoring must skip: everything outside the
  /// test split (unlabeled pixels carry no truth and are skipped anyway).
  std::vector<bool> non_test_mask() const { return mask({Split::train, Split::val}); }
};

struct SplitOptions {
  double train_fraction = 0.20;
  double val_fraction = 0.16;
  std::uint64_t seed = 0;
  bool stratified = true;
};

/// Random train/val/test split of the labeled pixels with floor rounding
/// (per class when stratified). Classes with fewer than 3 pixels get one
/// training pixel, the rest go to test, and a warning is recorded.
inline LabeledDataset split_dataset(const GroundTruth& gt, std::size_t m, SplitOptions opts = {}) {
  gt.validate();
  if (opts.train_fraction < 0 || opts.val_fraction < 0 || opts.train_fraction + opts.val_fraction >= 1.0)
    throw Error("split_dataset: fractions must be >= 0 and sum to less than 1");
  LabeledDataset ds;
  ds.height = gt.height;
  ds.width = gt.width;
  ds.num_classes = gt.num_classes;
  ds.m = m;

  std::mt19937_64 rng(opts.seed);
  auto take = [](double frac, std::size_t n) {
    return static_cast<std::size_t>(std::floor(frac * double(n) + 1e-9));
  };
  auto assign = [&](std::vector<DatasetEntry> group, bool tiny) {
    std::shuffle(group.begin(), group.end(), rng);
    std::size_t n_train = take(opts.train_fraction, group.size());
    std::size_t n_val = take(opts.val_fraction, group.size());
    if (tiny) {
      n_train = opts.train_fraction > 0 ? 1 : 0;
      n_val = 0;
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      group[i].split = i < n_train ? Split::train : i < n_train + n_val ? Split::val : Split::test;
      ds.entries.push_back(group[i]);
    }
  };

  std::vector<std::vector<DatasetEntry>> by_class(gt.num_classes + 1);
  for (std::size_t r = 0; r < gt.height; ++r)
    for (std::size_t c = 0; c < gt.width; ++c)
      if (const auto y = gt.at(r, c)) by_class[y].push_back({r, c, y, Split::test});

  if (opts.stratified) {
    for (std::size_t k = 1; k <= gt.num_classes; ++k) {
      if (by_class[k].empty()) continue;
      const bool tiny = by_class[k].size() < 3;
      if (tiny)
        ds.warnings.push_back(detail::concat("class ", k, " has only ", by_class[k].size(),
                                             " labeled pixel(s); one goes to train, the rest to test"));
      assign(std::move(by_class[k]), tiny);
    }
  } else {
    std::vector<DatasetEntry> all;
    for (auto& g : by_class) all.insert(all.end(), g.begin(), g.end());
    assign(std::move(all), false);
  }
  return ds;
}

template <typename T = float>
struct PatchBatch {
  std::vector<BasicTensor<T>> x;  // each [B, m, m]
  std::vector<std::uint16_t> y;
  std::vector<std::size_t> entries;
};

/// Draws up to `batch` distinct entries of a split and cuts their patches.
template <typename T = float>
PatchBatch<T> sample_batch(const LabeledDataset& ds, const HsiCube& cube, Split split, std::size_t batch,
                           std::mt19937_64& rng) {
  auto idx = ds.indices(split);
  if (idx.empty()) throw Error(detail::concat("sample_batch: split '", to_string(split), "' is empty"));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(batch, idx.size()));
  PatchBatch<T> out;
  for (auto i : idx) {
    const auto& e = ds.entries[i];
    out.x.push_back(extract_patch<T>(cube, e.row, e.col, ds.m));
    out.y.push_back(e.label);
    out.entries.push_back(i);
  }
  return out;
}

template <typename T>
struct LossAndGradients {
  double loss = 0.0;
  std::vector<std::vector<T>> grads;  // aligned with Model::parameters()
};

/// Mean softmax cross-entropy over a batch of [B, m, m] patches and its
/// gradient. Samples may run in parallel; their gradients are summed in
/// sample order.
template <typename T>
LossAndGradients<T> backward(Model<T>& model, std::span<const BasicTensor<T>> xs, std::span<const std::uint16_t> ys,
                             KernelOptions opts = {}) {
  if (xs.size() != ys.size() || xs.empty()) throw Error("backward: need matching, non-empty x and y batches");
  for (std::size_t i = 0; i + 1 < model.size(); ++i)
    if (model.layer(i).spec.kind == LayerKind::Softmax)
      throw ValidationError(detail::concat("backward: layer '", model.layer(i).spec.id,
                                           "' (Softmax) is not differentiable outside the loss head"));
  const std::size_t C = model.structure().num_classes;
  const std::size_t n = xs.size();
  std::vector<std::vector<std::vector<T>>> per_sample(n);
  std::vector<double> losses(n);

  parallel_for(0, n, [&](std::size_t s) {
    if (ys[s] < 1 || ys[s] > C) throw Error(detail::concat("backward: label ", ys[s], " out of range 1..", C));
    const auto trace = model.forward_trace(model.wrap_input(xs[s]), opts);
    const auto& z = trace.inputs.back();
    if (z.size() != C) throw ShapeError("backward: network output is not a single C-vector");
    T mx = z[0];
    for (std::size_t k = 1; k < C; ++k) mx = std::max(mx, z[k]);
    double sum = 0;
    for (std::size_t k = 0; k < C; ++k) sum += std::exp(double(z[k] - mx));
    losses[s] = std::log(sum) + double(mx) - double(z[ys[s] - 1]);
    BasicTensor<T> g(z.dims());
    for (std::size_t k = 0; k < C; ++k) g[k] = static_cast<T>(std::exp(double(z[k] - mx)) / sum);
    g[ys[s] - 1] -= T(1);
    per_sample[s] = model.zero_gradients();
    model.backward(trace, std::move(g), per_sample[s]);
  });

  LossAndGradients<T> out;
  out.grads = model.zero_gradients();
  for (std::size_t s = 0; s < n; ++s) {
    out.loss += losses[s];
    for (std::size_t p = 0; p < out.grads.size(); ++p)
      for (std::size_t i = 0; i < out.grads[p].size(); ++i) out.grads[p][i] += per_sample[s][p][i];
  }
  const T scale = T(1) / static_cast<T>(n);
  for (auto& g : out.grads)
    for (auto& v : g) v *= scale;
  out.loss /= double(n);
  return out;
}

enum class Precision { f32, f64 };

struct TrainConfig {
  std::size_t batch_size = 100;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  Precision precision = Precision::f32;
  bool batchnorm_warmup = true;

  void validate() const {
    if (!(lr >= 0)) throw Error("train: lr must be >= 0");
    if (!(momentum >= 0 && momentum < 1)) throw Error("train: momentum must be in [0, 1)");
    if (!batch_size) throw Error("train: batch size must be >= 1");
    if (weight_decay < 0) throw Error("train: weight decay must be >= 0");
  }
};

struct TrainLog {
  double initial_loss = 0.0;          // mean train loss before the first update
  std::vector<double> epoch_loss;     // mean train loss per epoch
  std::vector<double> val_oa;         // NaN when there is no val split
  std::size_t best_epoch = 0;         // 1-based; 0 when no epoch ran
  double best_val_oa = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::string> notes;
};

struct TrainResult {
  NetworkGraph net;
  TrainLog log;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::string msg, NetworkGraph last_good) : Error(std::move(msg)), last_good(std::move(last_good)) {}
  NetworkGraph last_good;
};

namespace detail {

// Overall accuracy of the current weights on one split.
inline double split_accuracy(const NetworkGraph& net, const HsiCube& cube, const LabeledDataset& ds, Split split) {
  const auto idx = ds.indices(split);
  if (idx.empty()) return std::nan("");
  const Model<float> model(net);
  ClassificationMap map;
  if (validate_tppi(net).empty()) {
    map = predict_image(model, cube, true);
  } else {
    std::vector<Pixel> px;
    for (auto i : idx) px.push_back({ds.entries[i].row, ds.entries[i].col});
    map = predict_patchwise(model, cube, PixelSelection::only(std::move(px)));
  }
  std::size_t hit = 0;
  for (auto i : idx) hit += map.at(ds.entries[i].row, ds.entries[i].col) == ds.entries[i].label;
  return double(hit) / double(idx.size());
}

// Sets frozen batch-norm statistics from the train patches, one layer at a
// time so each layer sees the normalized output of the ones before it.
template <typename T>
void warm_up_batchnorm(Model<T>& model, const std::vector<BasicTensor<T>>& patches) {
  for (std::size_t li = 0; li < model.size(); ++li) {
    auto& L = model.layer(li);
    if (L.spec.kind != LayerKind::BatchNorm) continue;
    const std::size_t C = L.bn.channels();
    std::vector<double> sum(C, 0.0), sq(C, 0.0);
    std::size_t per_channel = 0;
    for (const auto& x : patches) {
      const auto trace = model.forward_trace(model.wrap_input(x));
      const auto& in = trace.inputs[li];
      const std::size_t plane = in.size() / C;
      per_channel += plane;
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < plane; ++i) {
          const double v = in[c * plane + i];
          sum[c] += v;
          sq[c] += v * v;
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
      const double mean = sum[c] / double(per_channel);
      L.bn.running_mean[c] = static_cast<T>(mean);
      L.bn.running_var[c] = static_cast<T>(std::max(0.0, sq[c] / double(per_channel) - mean * mean));
    }
  }
}

template <typename T>
double mean_loss(Model<T>& model, const std::vector<BasicTensor<T>>& xs, const std::vector<std::uint16_t>& ys,
                 std::size_t chunk) {
  double total = 0;
  for (std::size_t i = 0; i < xs.size(); i += chunk) {
    const std::size_t n = std::min(chunk, xs.size() - i);
    auto r = backward<T>(model, std::span(xs).subspan(i, n), std::span(ys).subspan(i, n));
    total += r.loss * double(n);
  }
  return total / double(xs.size());
}

template <typename T>
TrainResult train_impl(NetworkGraph net, const HsiCube& cube, const LabeledDataset& ds, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  bool needs_init = false;
  for (const auto& l : net.layers) needs_init |= is_parametric(l.kind) && !l.has_weights();
  if (needs_init) he_initialize(net, cfg.seed);

  Model<T> model(net);
  TrainLog log;
  log.notes.push_back("batch norm runs with frozen statistics; gamma and beta are trained");

  const auto train_idx = ds.indices(Split::train);
  if (train_idx.empty()) throw Error("train: empty train split");
  std::vector<BasicTensor<T>> xs;
  std::vector<std::uint16_t> ys;
  for (auto i : train_idx) {
    xs.push_back(extract_patch<T>(cube, ds.entries[i].row, ds.entries[i].col, ds.m));
    ys.push_back(ds.entries[i].label);
  }

  bool has_bn = false;
  for (const auto& l : net.layers) has_bn |= l.kind == LayerKind::BatchNorm;
  if (has_bn && cfg.batchnorm_warmup) {
    warm_up_batchnorm(model, xs);
    log.notes.push_back("batch norm statistics estimated from one pass over the train split");
  }

  log.initial_loss = mean_loss(model, xs, ys, cfg.batch_size);
  auto params = model.parameters();
  std::vector<std::vector<T>> velocity;
  for (auto p : params) velocity.emplace_back(p.size(), T{});

  std::mt19937_64 rng(cfg.seed);
  NetworkGraph best = model.to_graph();
  NetworkGraph last_good = best;
  log.best_val_oa = -1.0;
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const T lr = static_cast<T>(cfg.lr), mu = static_cast<T>(cfg.momentum), wd = static_cast<T>(cfg.weight_decay);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      std::vector<BasicTensor<T>> bx;
      std::vector<std::uint16_t> by;
      for (std::size_t k = 0; k < n; ++k) {
        bx.push_back(xs[order[start + k]]);
        by.push_back(ys[order[start + k]]);
      }
      auto r = backward<T>(model, bx, by);
      if (!std::isfinite(r.loss))
        throw DivergenceError(detail::concat("train: loss became non-finite in epoch ", epoch), last_good);
      epoch_loss += r.loss * double(n);
      for (std::size_t p = 0; p < params.size(); ++p)
        for (std::size_t i = 0; i < params[p].size(); ++i) {
          T& w = params[p][i];
          T& v = velocity[p][i];
          v = mu * v - lr * (r.grads[p][i] + wd * w);
          w += v;
        }
    }
    log.epoch_loss.push_back(epoch_loss / double(order.size()));
    last_good = model.to_graph();
    const double oa = split_accuracy(last_good, cube, ds, Split::val);
    log.val_oa.push_back(oa);
    if (std::isnan(oa)) {  // no val split: keep the latest weights
      log.best_epoch = epoch;
      best = last_good;
    } else if (oa > log.best_val_oa) {
      log.best_val_oa = oa;
      log.best_epoch = epoch;
      best = last_good;
    }
  }
  if (log.best_val_oa < 0) log.best_val_oa = std::nan("");
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(best), std::move(log)};
}

}  // namespace detail

/// Minibatch SGD with momentum and weight decay on pixel patches:
///   v <- momentum·v − lr·(g + weight_decay·w);  w <- w + v
/// One epoch is one shuffled pass over the train split. The returned network
/// holds the weights of the epoch with the best validation accuracy.
inline TrainResult train(const NetworkGraph& net, const HsiCube& cube, const LabeledDataset& ds,
                         const TrainConfig& cfg) {
  cfg.validate();
  check_graph(net);
  if (ds.m != net.sample_size)
    throw Error(detail::concat("train: dataset patch size ", ds.m, " != network m ", net.sample_size));
  if (cube.bands != net.bands)
    throw ShapeError(detail::concat("train: cube has ", cube.bands, " bands, network expects ", net.bands));
  return cfg.precision == Precision::f64 ? detail::train_impl<double>(net, cube, ds, cfg)
                                         : detail::train_impl<float>(net, cube, ds, cfg);
}

}  // namespace tppi
