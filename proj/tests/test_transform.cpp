// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tppi/model.hpp"
#include "tppi/presets.hpp"
#include "tppi/transform.hpp"

using namespace tppi;

namespace {

LayerSpec random_fc(std::mt19937_64& rng, std::size_t in, std::size_t out) {
  LayerSpec fc;
  fc.id = "head";
  fc.kind = LayerKind::Fc;
  fc.in_features = in;
  fc.out_features = out;
  fc.weights = oracle::random_values(in * out, rng);
  fc.bias = oracle::random_values(out, rng);
  return fc;
}

Tensor run_conv(const LayerSpec& l, const Tensor& x, KernelOptions o = {}) {
  ConvKernel2d<float> k{l.out_channels, l.in_channels, l.kh, l.kw, l.weights, l.bias, l.stride_h, l.stride_w, l.pad};
  return conv2d(x, k, o);
}

}  // namespace

TEST(FcToConv, OneByOneIsRelabeling) {
  std::mt19937_64 rng(1);
  const auto fc_layer = random_fc(rng, 24, 16);
  const auto conv = fc_to_conv(fc_layer, {3, 24, 0, 1, 1});
  EXPECT_EQ(conv.kind, LayerKind::Conv2d);
  EXPECT_EQ(conv.kh, 1u);
  const auto x = oracle::random_tensor({24, 1, 1}, rng);
  FcParams<float> p{24, 16, fc_layer.weights, fc_layer.bias};
  EXPECT_EQ(run_conv(conv, x), fc(x, p));
}

TEST(FcToConv, SpatialHeadIsBitExactAndMatchesOracle) {
  std::mt19937_64 rng(2);
  const auto fc_layer = random_fc(rng, 128 * 3 * 3, 16);
  const auto conv = fc_to_conv(fc_layer, {3, 128, 0, 3, 3});
  EXPECT_EQ(conv.weights, fc_layer.weights);
  FcParams<float> p{128 * 9, 16, fc_layer.weights, fc_layer.bias};
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = oracle::random_tensor({128, 3, 3}, rng);
    const auto y = run_conv(conv, x);
    EXPECT_EQ(y, fc(x, p));
    const auto ref = oracle::fc(x.storage(), fc_layer.weights, fc_layer.bias, 16);
    for (std::size_t o = 0; o < 16; ++o) EXPECT_NEAR(y[o], ref[o], 1e-4);
    const auto y64 = run_conv(conv, x, {Accumulation::f64});
    for (std::size_t o = 0; o < 16; ++o) EXPECT_NEAR(y64[o], ref[o], 1e-6);
  }
}

TEST(FcToConv, FeatureMismatchNamesExpectedCount) {
  std::mt19937_64 rng(3);
  try {
    fc_to_conv(random_fc(rng, 100, 4), {3, 128, 0, 3, 3});
    FAIL();
  } catch (const TransformError& e) {
    EXPECT_NE(std::string(e.what()).find("1152"), std::string::npos);
  }
}

TEST(Destride, KeepsWeightsAndDropsPadding) {
  LayerSpec l;
  l.id = "s";
  l.kind = LayerKind::Conv2d;
  l.in_channels = 2, l.out_channels = 3, l.kh = l.kw = 3, l.stride_h = l.stride_w = 2, l.pad = 1;
  std::mt19937_64 rng(4);
  l.weights = oracle::random_values(l.weight_count(), rng);
  const auto d = destride(l);
  EXPECT_EQ(d.stride_h, 1u);
  EXPECT_EQ(d.stride_w, 1u);
  EXPECT_EQ(d.pad, 0u);
  EXPECT_EQ(d.weights, l.weights);
  EXPECT_THROW(destride(d), TransformError);
}

TEST(GlobalPoolToSliding, EqualsGlobalMean) {
  LayerSpec g;
  g.id = "gap";
  g.kind = LayerKind::GlobalAvgPool;
  std::mt19937_64 rng(5);
  for (std::size_t s : {1, 3, 5}) {
    const auto pool = globalpool_to_sliding(g, {3, 8, 0, s, s});
    EXPECT_EQ(pool.kind, LayerKind::AvgPool2d);
    EXPECT_EQ(pool.kh, s);
    const auto x = oracle::random_tensor({8, s, s}, rng);
    const auto y = avgpool2d_sliding(x, pool.kh);
    EXPECT_EQ(y, global_avgpool(x));
    if (s == 1) {
      EXPECT_EQ(y, x);
    }
  }
  EXPECT_EQ(avgpool2d_sliding(Tensor({1, 3, 3}, 1.0f), 3)[0], 1.0f);
  EXPECT_THROW(globalpool_to_sliding(g, {3, 8, 0, 3, 4}), TransformError);
}

TEST(Transform, SsrnLikeIsWeightPreserving) {
  auto net = ssrn_like(20, 5);
  he_initialize(net, 1);
  const auto [out, rep] = transform(net);
  EXPECT_FALSE(rep.retrain_required);
  EXPECT_TRUE(validate_tppi(out).empty());
  EXPECT_EQ(rep.receptive_field_after, 7u);
  for (const auto& r : rep.rewrites) EXPECT_TRUE(r.weight_preserving) << r.layer_id;

  Model<float> before(net), after(out);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    const auto x = before.wrap_input(oracle::random_tensor({20, 7, 7}, rng));
    EXPECT_EQ(before.forward(x).storage(), after.forward(x).storage());
  }
}

TEST(Transform, PresnetLikeNeedsRetraining) {
  auto net = presnet_like(12, 4);
  he_initialize(net, 1);
  const auto [out, rep] = transform(net);
  EXPECT_TRUE(rep.retrain_required);
  EXPECT_TRUE(validate_tppi(out).empty());
  EXPECT_EQ(receptive_field(out), 11u);
  bool destrided = false;
  for (const auto& r : rep.rewrites) destrided |= r.rule == "destride";
  EXPECT_TRUE(destrided);
}

TEST(Transform, IdempotentAndIdentityOnImageNets) {
  for (auto net : {ssrn_like(20, 5), presnet_like(12, 4), compact_tppi(8, 4, 7)}) {
    const auto once = transform(net).first;
    const auto [twice, rep] = transform(once);
    EXPECT_EQ(twice, once);
    EXPECT_TRUE(rep.rewrites.empty());
    EXPECT_FALSE(rep.retrain_required);
  }
}

TEST(Transform, UntransformableHeadIsReported) {
  // Fc fed by a 4×4 map whose producer was strided: after destriding the map
  // is larger than the Fc input, so no conv can replace it without pooling.
  auto net = NetBuilder("stuck", 2, 7, 3, 2).conv2d(2, 2, 3, 2, 1).fc(32, 2).build();
  EXPECT_THROW(transform(net), TransformError);
}
