// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tppi/engine.hpp"
#include "tppi/presets.hpp"

using namespace tppi;

namespace {

HsiCube random_cube(std::size_t h, std::size_t w, std::size_t b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  HsiCube cube(h, w, b, "random");
  cube.data = oracle::random_values(h * w * b, rng, 0.0f, 1.0f);
  return cube;
}

NetworkGraph small_net(std::size_t bands, std::size_t classes, std::size_t m, std::uint64_t seed) {
  auto net = compact_tppi(bands, classes, m, 3, 4);
  he_initialize(net, seed);
  return net;
}

NetworkGraph identity_net(std::size_t bands) {
  auto net = NetBuilder("identity", bands, 1, 3, bands).conv2d(bands, bands, 1).build();
  auto& l = net.layers[0];
  l.weights.assign(bands * bands, 0.0f);
  for (std::size_t i = 0; i < bands; ++i) l.weights[i * bands + i] = 1.0f;
  return net;
}

}  // namespace

TEST(PredictImage, ShapeLawOnSceneSizedCube) {
  const auto cube = random_cube(145, 145, 4, 1);
  const auto net = small_net(4, 3, 7, 2);
  const auto raw = predict_image(net, cube, false);
  EXPECT_EQ(raw.height, 139u);
  EXPECT_EQ(raw.width, 139u);
  const auto full = predict_image(net, cube, true);
  EXPECT_EQ(full.height, 145u);
  EXPECT_EQ(full.width, 145u);
  EXPECT_TRUE(full.provenance.padded);
  EXPECT_EQ(full.provenance.mode, PredictMode::image);
}

TEST(PredictImage, RejectsPixelClassifiersAndSmallCubes) {
  auto net = presnet_like(4, 3);
  he_initialize(net, 1);
  try {
    predict_image(net, random_cube(16, 16, 4, 1), true);
    FAIL();
  } catch (const TppiViolationError& e) {
    EXPECT_FALSE(e.violations.empty());
  }
  EXPECT_THROW(predict_image(small_net(4, 3, 7, 1), random_cube(6, 9, 4, 1), false), ShapeError);
}

TEST(PredictImage, SinglePatchEqualsPatchwiseCenter) {
  const auto net = small_net(5, 3, 5, 3);
  const auto cube = random_cube(5, 5, 5, 4);
  const auto img = predict_image(net, cube, false, {{}, true});
  ASSERT_EQ(img.height, 1u);
  const auto patch = predict_patchwise(net, cube, PixelSelection::only({{2, 2}}), {{}, true});
  EXPECT_EQ(img.at(0, 0), patch.at(2, 2));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(img.logit(k, 0, 0), patch.logit(k, 2, 2));
}

TEST(PredictPatchwise, FullMapAndSelections) {
  const auto cube = random_cube(20, 18, 4, 5);
  const auto net = small_net(4, 3, 7, 6);
  const auto all = predict_patchwise(net, cube);
  EXPECT_EQ(all.height, 20u);
  EXPECT_EQ(all.width, 18u);
  for (auto c : all.class_of) EXPECT_TRUE(c >= 1 && c <= 3);
  const auto some = predict_patchwise(net, cube, PixelSelection::only({{0, 0}, {19, 17}}));
  EXPECT_EQ(some.at(0, 0), all.at(0, 0));
  EXPECT_EQ(some.at(19, 17), all.at(19, 17));
  EXPECT_EQ(some.at(5, 5), 0);
}

TEST(PredictPatchwise, IdentityNetPicksArgmaxOfSpectrum) {
  HsiCube cube(1, 1, 4);
  cube.data = {0.1f, 0.7f, 0.7f, 0.2f};
  const auto map = predict_patchwise(identity_net(4), cube);
  EXPECT_EQ(map.at(0, 0), 2);  // tie between bands 2 and 3 goes to the lower one
}

TEST(PredictPatchwise, ConstantCubeGivesConstantMap) {
  HsiCube cube(9, 9, 4);
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < 81; ++i) cube.data[b * 81 + i] = 0.1f * float(b + 1);
  const auto map = predict_patchwise(small_net(4, 3, 5, 7), cube);
  for (auto c : map.class_of) EXPECT_EQ(c, map.class_of[0]);
}

TEST(PredictPatchwise, RejectsEvenMAndBandMismatch) {
  auto net = NetBuilder("even", 4, 2, 3, 2).conv2d(4, 2, 2).build();
  he_initialize(net, 1);
  EXPECT_THROW(predict_patchwise(net, random_cube(8, 8, 4, 1)), ValidationError);
  EXPECT_THROW(predict_patchwise(small_net(4, 3, 3, 1), random_cube(8, 8, 5, 1)), ShapeError);
}

TEST(PredictPatchwise, BatchSizeDoesNotChangeResult) {
  const auto cube = random_cube(12, 12, 4, 8);
  const Model<float> model(small_net(4, 3, 5, 9));
  const auto a = predict_patchwise(model, cube, {}, {{}, true, 1});
  const auto b = predict_patchwise(model, cube, {}, {{}, true, 37});
  EXPECT_EQ(a.logits, b.logits);
}

TEST(PredictTiled, MatchesWholeImage) {
  const auto cube = random_cube(64, 64, 4, 10);
  const Model<float> model(small_net(4, 3, 7, 11));
  const auto whole = predict_image(model, cube, false, {{}, true});
  for (std::size_t tile : {7, 17, 32, 64, 100}) {
    const auto t = predict_tiled(model, cube, tile, false, {{}, true});
    EXPECT_EQ(t.class_of, whole.class_of) << tile;
    EXPECT_EQ(t.logits, whole.logits) << tile;
  }
  EXPECT_THROW(predict_tiled(model, cube, 6), ShapeError);
}

TEST(Equivalence, ImageAndPatchAgreeExactly) {
  const auto cube = random_cube(24, 20, 6, 12);
  for (std::size_t m : {3, 5, 7}) {
    const auto net = random_tppi_net(100 + m, 6, 4, m);
    const auto rep = verify_equivalence(net, cube);
    EXPECT_EQ(rep.max_abs_logit_diff, 0.0) << m;
    EXPECT_EQ(rep.argmax_disagreements, 0u);
    EXPECT_EQ(rep.pixels_compared, 24u * 20u);
  }
}

TEST(Equivalence, SinglePixelWithUnitPatch) {
  HsiCube cube(1, 1, 3);
  cube.data = {0.2f, 0.1f, 0.4f};
  const auto rep = verify_equivalence(identity_net(3), cube);
  EXPECT_EQ(rep.max_abs_logit_diff, 0.0);
  EXPECT_TRUE(rep.equivalent());
}

TEST(Equivalence, UnmatchedReductionOrderStaysWithinTolerance) {
  const auto cube = random_cube(16, 16, 8, 13);
  const auto net = small_net(8, 4, 5, 14);
  const auto rep =
      verify_equivalence(net, cube, 1e-4, {Accumulation::f32, ReductionOrder::spatial_major}, {});
  EXPECT_LE(rep.max_abs_logit_diff, 1e-4);
  EXPECT_EQ(rep.logits_beyond_tolerance, 0u);
  if (rep.argmax_disagreements) {
    EXPECT_LT(rep.min_margin_at_disagreement, 1e-3);
  }
}
