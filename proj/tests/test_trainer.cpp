// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tppi/trainer.hpp"

using namespace tppi;

namespace {

GroundTruth ip_like_gt() {
  // Class sizes of a 16-class, 10249-pixel labeled scene laid out on 145×145.
  const std::vector<std::size_t> sizes = {46, 1428, 830, 237, 483, 730, 28, 478, 20, 972, 2455, 593, 205, 1265, 386, 93};
  GroundTruth gt;
  gt.height = gt.width = 145;
  gt.num_classes = 16;
  gt.labels.assign(145 * 145, 0);
  std::size_t p = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k)
    for (std::size_t i = 0; i < sizes[k]; ++i) gt.labels[p++] = static_cast<std::uint16_t>(k + 1);
  std::mt19937_64 rng(5);
  std::shuffle(gt.labels.begin(), gt.labels.end(), rng);
  return gt;
}

SyntheticScene scene(std::uint64_t seed = 1, std::size_t h = 24, std::size_t w = 24) {
  SceneSpec s;
  s.height = h, s.width = w, s.bands = 6, s.classes = 3, s.seed = seed;
  return gen_synthetic(s);
}

}  // namespace

TEST(Split, FloorRoundingPerClass) {
  const auto gt = ip_like_gt();
  ASSERT_EQ(gt.labeled_count(), 10249u);
  const auto ds = split_dataset(gt, 7, {0.20, 0.16, 1, true});
  std::size_t want_train = 0, want_val = 0;
  for (std::size_t s : {46, 1428, 830, 237, 483, 730, 28, 478, 20, 972, 2455, 593, 205, 1265, 386, 93}) {
    want_train += static_cast<std::size_t>(std::floor(0.20 * double(s)));
    want_val += static_cast<std::size_t>(std::floor(0.16 * double(s)));
  }
  EXPECT_EQ(ds.count(Split::train), want_train);
  EXPECT_EQ(ds.count(Split::val), want_val);
  EXPECT_EQ(ds.count(Split::train), 2045u);
  EXPECT_EQ(ds.count(Split::val), 1630u);
  EXPECT_EQ(ds.entries.size(), 10249u);
}

TEST(Split, GlobalModeFloorsOverAllLabeledPixels) {
  const auto ds = split_dataset(ip_like_gt(), 7, {0.20, 0.16, 1, false});
  EXPECT_EQ(ds.count(Split::train), static_cast<std::size_t>(std::floor(0.20 * 10249)));
  EXPECT_EQ(ds.count(Split::val), static_cast<std::size_t>(std::floor(0.16 * 10249)));
  EXPECT_TRUE(ds.warnings.empty());
}

TEST(Split, InvariantsAndDeterminism) {
  const auto s = scene(3);
  auto gt = s.gt;
  for (std::size_t i = 0; i < gt.labels.size(); i += 5) gt.labels[i] = 0;
  const auto a = split_dataset(gt, 3, {0.2, 0.16, 7, true});
  const auto b = split_dataset(gt, 3, {0.2, 0.16, 7, true});
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].row, b.entries[i].row);
    EXPECT_EQ(a.entries[i].split, b.entries[i].split);
  }
  std::vector<int> seen(gt.labels.size(), 0);
  for (const auto& e : a.entries) {
    EXPECT_NE(gt.at(e.row, e.col), 0);
    EXPECT_EQ(gt.at(e.row, e.col), e.label);
    ++seen[e.row * gt.width + e.col];
  }
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], gt.labels[i] ? 1 : 0);
}

TEST(Split, ZeroFractionsMakeEverythingTest) {
  const auto s = scene();
  const auto ds = split_dataset(s.gt, 3, {0.0, 0.0, 1, true});
  EXPECT_EQ(ds.count(Split::test), s.gt.labeled_count());
  EXPECT_THROW(split_dataset(s.gt, 3, {0.6, 0.4, 1, true}), Error);
}

TEST(Split, TinyClassWarnsAndKeepsOneTrainPixel) {
  GroundTruth gt;
  gt.height = 1, gt.width = 12, gt.num_classes = 2;
  gt.labels = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2};
  const auto ds = split_dataset(gt, 1);
  ASSERT_EQ(ds.warnings.size(), 1u);
  std::size_t train2 = 0, test2 = 0;
  for (const auto& e : ds.entries)
    if (e.label == 2) (e.split == Split::train ? train2 : test2) += 1;
  EXPECT_EQ(train2, 1u);
  EXPECT_EQ(test2, 1u);
}

TEST(SampleBatch, PatchesMatchReflectionOracle) {
  const auto s = scene(2, 10, 11);
  auto ds = split_dataset(s.gt, 5, {0.5, 0.0, 1, true});
  std::mt19937_64 rng(1);
  const auto batch = sample_batch(ds, s.cube, Split::train, 8, rng);
  ASSERT_EQ(batch.x.size(), 8u);
  for (std::size_t i = 0; i < batch.x.size(); ++i) {
    const auto& e = ds.entries[batch.entries[i]];
    EXPECT_EQ(batch.y[i], e.label);
    ASSERT_EQ(batch.x[i].dims(), (Dims{6, 5, 5}));
    for (std::size_t b = 0; b < 6; ++b)
      for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 5; ++c)
          ASSERT_EQ(batch.x[i].at(b, r, c), s.cube.at(b, oracle::mirror(long(e.row + r) - 2, 10),
                                                        oracle::mirror(long(e.col + c) - 2, 11)));
  }
  const auto corner = extract_patch(s.cube, 0, 0, 7);
  EXPECT_EQ(corner.at(0, 0, 0), s.cube.at(0, 3, 3));
  EXPECT_EQ(corner.at(1, 2, 5), s.cube.at(1, 1, 2));

  std::mt19937_64 r1(9), r2(9);
  EXPECT_EQ(sample_batch(ds, s.cube, Split::train, 1, r1).entries, sample_batch(ds, s.cube, Split::train, 1, r2).entries);
  EXPECT_THROW(sample_batch(ds, s.cube, Split::val, 1, r1), Error);
}

TEST(SampleBatch, SceneSizedPatchDims) {
  HsiCube cube(9, 9, 200);
  EXPECT_EQ(extract_patch(cube, 4, 4, 7).dims(), (Dims{200, 7, 7}));
}

TEST(Train, ZeroLearningRateKeepsWeights) {
  const auto s = scene(4);
  auto net = compact_tppi(6, 3, 3, 2, 3);
  he_initialize(net, 1);
  const auto ds = split_dataset(s.gt, 3, {0.2, 0.16, 1, true});
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 2;
  cfg.batchnorm_warmup = false;
  const auto r = train(net, s.cube, ds, cfg);
  EXPECT_EQ(r.net, net);
  EXPECT_EQ(r.log.epoch_loss.size(), 2u);
}

TEST(Train, WeightDecayOnlyScalesWeights) {
  // Zero inputs and zero biases give zero gradients for every conv weight, so
  // each step multiplies w by (1 − lr·wd) when momentum is zero.
  HsiCube cube(6, 6, 3);
  GroundTruth gt;
  gt.height = gt.width = 6, gt.num_classes = 2;
  gt.labels.assign(36, 1);
  gt.labels[0] = 2;
  auto net = NetBuilder("wd", 3, 3, 3, 2).conv2d(3, 2, 3).build();
  he_initialize(net, 2);
  const auto ds = split_dataset(gt, 3, {0.5, 0.0, 1, true});
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.01;
  cfg.epochs = 1;
  cfg.batch_size = 100;  // one step
  cfg.precision = Precision::f64;
  const auto r = train(net, cube, ds, cfg);
  for (std::size_t i = 0; i < net.layers[0].weights.size(); ++i)
    EXPECT_NEAR(r.net.layers[0].weights[i], net.layers[0].weights[i] * (1 - 0.1 * 0.01), 1e-7);
}

TEST(Train, DeterministicIn64BitMode) {
  const auto s = scene(5);
  const auto ds = split_dataset(s.gt, 3, {0.2, 0.16, 1, true});
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 11;
  cfg.precision = Precision::f64;
  const auto net = compact_tppi(6, 3, 3, 2, 3);
  const auto a = train(net, s.cube, ds, cfg), b = train(net, s.cube, ds, cfg);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.log.epoch_loss, b.log.epoch_loss);
}

TEST(Train, LossDropsAndBestValKept) {
  const auto s = scene(6, 32, 32);
  const auto ds = split_dataset(s.gt, 5, {0.2, 0.16, 2, true});
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.seed = 3;
  const auto r = train(compact_tppi(6, 3, 5), s.cube, ds, cfg);
  EXPECT_EQ(r.log.epoch_loss.size(), 12u);
  EXPECT_EQ(r.log.val_oa.size(), 12u);
  EXPECT_LT(r.log.epoch_loss[9], r.log.initial_loss);
  EXPECT_GE(r.log.best_epoch, 1u);
  EXPECT_EQ(r.log.best_val_oa, *std::max_element(r.log.val_oa.begin(), r.log.val_oa.end()));
  EXPECT_FALSE(r.log.notes.empty());
}

TEST(Train, DivergenceCarriesLastGoodCheckpoint) {
  const auto s = scene(7);
  const auto ds = split_dataset(s.gt, 3, {0.2, 0.16, 1, true});
  TrainConfig cfg;
  cfg.lr = 1e30;
  cfg.epochs = 5;
  try {
    train(compact_tppi(6, 3, 3), s.cube, ds, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_FALSE(e.last_good.layers.empty());
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
}
