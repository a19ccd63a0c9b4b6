// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "tppi/presets.hpp"

using namespace tppi;

namespace {

NetworkGraph init(NetworkGraph net, std::uint64_t seed) { return gradcheck::randomize(std::move(net), seed); }

void expect_grads_match(const NetworkGraph& net, std::uint64_t seed) {
  const auto r = gradcheck::check(net, 3, 50, seed);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.worst_rel_err, 1e-5) << net.name;
}

}  // namespace

TEST(Backward, Conv2dWithStrideAndPad) {
  expect_grads_match(init(NetBuilder("c2", 3, 5, 3, 3).conv2d(3, 4, 3, 2, 1).relu().conv2d(4, 3, 3).build(), 1), 1);
}

TEST(Backward, Conv3dWithSpectralStride) {
  auto net = NetBuilder("c3", 9, 3, 4, 2).conv3d(1, 2, 3, 3, 2, 1).collapse().conv2d(10, 2, 1).build();
  expect_grads_match(init(net, 2), 2);
}

TEST(Backward, BatchNormFrozen) {
  expect_grads_match(init(NetBuilder("bn", 2, 3, 3, 3).conv2d(2, 4, 3).bn(4).conv2d(4, 3, 1).build(), 3), 3);
}

TEST(Backward, AvgPoolAndGlobalPoolAndFc) {
  auto net = NetBuilder("pool", 2, 5, 3, 3).conv2d(2, 3, 3).avgpool(2).global_pool().fc(3, 3).build();
  expect_grads_match(init(net, 4), 4);
  auto net2 = NetBuilder("fc", 2, 3, 3, 4).conv2d(2, 3, 1).relu().fc(27, 4).build();
  expect_grads_match(init(net2, 5), 5);
}

TEST(Backward, ResidualBlockWithCrop) {
  auto net = NetBuilder("res", 2, 5, 3, 2).conv2d(2, 3, 1).residual_begin().conv2d(3, 3, 3).relu().residual_end()
                 .conv2d(3, 2, 3)
                 .build();
  expect_grads_match(init(net, 6), 6);
}

TEST(Backward, ZeroWeightsGiveUniformLoss) {
  auto net = NetBuilder("zero", 3, 1, 3, 5).conv2d(3, 5, 1).build();
  he_initialize(net, 1);
  std::fill(net.layers[0].weights.begin(), net.layers[0].weights.end(), 0.0f);
  Model<double> model(net);
  std::vector<BasicTensor<double>> xs{BasicTensor<double>({3, 1, 1}, 0.7)};
  std::vector<std::uint16_t> ys{2};
  EXPECT_NEAR(backward<double>(model, xs, ys).loss, std::log(5.0), 1e-12);
}

TEST(Backward, DuplicatedSampleMeanReduction) {
  auto net = init(NetBuilder("dup", 2, 3, 3, 3).conv2d(2, 3, 3).build(), 7);
  Model<double> model(net);
  std::mt19937_64 rng(8);
  BasicTensor<double> x({2, 3, 3});
  for (auto& v : x.storage()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  std::vector<BasicTensor<double>> one{x}, two{x, x};
  std::vector<std::uint16_t> y1{2}, y2{2, 2};
  const auto a = backward<double>(model, one, y1), b = backward<double>(model, two, y2);
  EXPECT_EQ(a.loss, b.loss);
  for (std::size_t p = 0; p < a.grads.size(); ++p)
    for (std::size_t i = 0; i < a.grads[p].size(); ++i) EXPECT_DOUBLE_EQ(a.grads[p][i], b.grads[p][i]);
}

TEST(Backward, SoftmaxInsideChainRejected) {
  auto net = NetBuilder("sm", 2, 1, 3, 2).conv2d(2, 2, 1).softmax().conv2d(2, 2, 1).build();
  he_initialize(net, 1);
  Model<double> model(net);
  std::vector<BasicTensor<double>> xs{BasicTensor<double>({2, 1, 1}, 1.0)};
  std::vector<std::uint16_t> ys{1};
  EXPECT_THROW(backward<double>(model, xs, ys), ValidationError);
}
