// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "tppi/hsi.hpp"

using namespace tppi;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "tppi_test_hsi";
  fs::create_directories(dir);
  return dir;
}

HsiCube random_cube(std::size_t h, std::size_t w, std::size_t b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  HsiCube cube(h, w, b, "rand");
  cube.data = oracle::random_values(h * w * b, rng, -50.0f, 900.0f);
  return cube;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(CubeIo, RoundTripIsBitExact) {
  auto cube = normalize_minmax(random_cube(7, 5, 3, 1));
  const auto path = temp_dir() / "cube.json";
  save_cube(cube, path);
  EXPECT_TRUE(fs::exists(temp_dir() / "cube.f32"));
  EXPECT_EQ(fs::file_size(temp_dir() / "cube.f32"), 7u * 5u * 3u * 4u);
  const auto back = load_cube(path);
  EXPECT_EQ(back.height, 7u);
  EXPECT_EQ(back.width, 5u);
  EXPECT_EQ(back.bands, 3u);
  EXPECT_EQ(back.data, cube.data);
  EXPECT_EQ(back.normalization.offset, cube.normalization.offset);
  EXPECT_EQ(back.normalization.scale, cube.normalization.scale);
}

TEST(CubeIo, PayloadIsLittleEndianBandSequential) {
  HsiCube cube(1, 2, 2);
  cube.data = {1.0f, 2.0f, -1.0f, 0.5f};
  save_cube(cube, temp_dir() / "le.json");
  std::ifstream in(temp_dir() / "le.f32", std::ios::binary);
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(b.size(), 16u);
  // 1.0f = 0x3f800000, stored low byte first
  EXPECT_EQ(b[0], 0x00);
  EXPECT_EQ(b[3], 0x3f);
  EXPECT_EQ(b[2], 0x80);
  // band 1, pixel 0 = -1.0f = 0xbf800000
  EXPECT_EQ(b[11], 0xbf);
}

TEST(CubeIo, ShortPayloadNamesByteCounts) {
  save_cube(random_cube(4, 4, 2, 2), temp_dir() / "short.json");
  fs::resize_file(temp_dir() / "short.f32", 100);
  const auto msg = message_of([&] { load_cube(temp_dir() / "short.json"); });
  EXPECT_NE(msg.find("128 bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("has 100"), std::string::npos) << msg;
}

TEST(CubeIo, RejectsNonFiniteAndBadHeaders) {
  HsiCube cube(1, 2, 1);
  cube.data = {1.0f, std::numeric_limits<float>::quiet_NaN()};
  save_cube(cube, temp_dir() / "nan.json");
  EXPECT_THROW(load_cube(temp_dir() / "nan.json"), FormatError);

  std::ofstream(temp_dir() / "bad.json") << R"({"height": 0, "width": 2, "bands": 1, "dtype": "f32le",
      "order": "band-sequential", "data_file": "bad.f32"})";
  EXPECT_NE(message_of([&] { load_cube(temp_dir() / "bad.json"); }).find("/height"), std::string::npos);
  std::ofstream(temp_dir() / "bad2.json") << R"({"height": 1, "width": 2, "bands": 1, "dtype": "f64le",
      "order": "band-sequential", "data_file": "bad.f32"})";
  EXPECT_NE(message_of([&] { load_cube(temp_dir() / "bad2.json"); }).find("/dtype"), std::string::npos);
}

TEST(GroundTruthIo, RoundTrip) {
  GroundTruth gt;
  gt.height = 2, gt.width = 3, gt.num_classes = 300;
  gt.labels = {0, 1, 2, 300, 4, 0};
  save_gt(gt, temp_dir() / "gt.json");
  const auto back = load_gt(temp_dir() / "gt.json");
  EXPECT_EQ(back.labels, gt.labels);
  EXPECT_EQ(back.num_classes, 300u);
  EXPECT_EQ(back.labeled_count(), 4u);
}

TEST(Normalization, MinMaxAndInverse) {
  const auto raw = random_cube(6, 6, 4, 3);
  const auto n = normalize_minmax(raw);
  for (std::size_t b = 0; b < 4; ++b) {
    float lo = 1e9f, hi = -1e9f;
    for (std::size_t i = 0; i < 36; ++i) lo = std::min(lo, n.data[b * 36 + i]), hi = std::max(hi, n.data[b * 36 + i]);
    EXPECT_EQ(lo, 0.0f);
    EXPECT_NEAR(hi, 1.0f, 1e-6);
  }
  const auto back = denormalize(n);
  for (std::size_t i = 0; i < raw.data.size(); ++i)
    EXPECT_NEAR(back.data[i], raw.data[i], 1e-6 * std::max(1.0f, std::abs(raw.data[i])) * 4);
  EXPECT_THROW(normalize_minmax(n), Error);
  HsiCube flat(2, 2, 1);
  flat.data.assign(4, 3.0f);
  EXPECT_EQ(normalize_minmax(flat).data, std::vector<float>(4, 0.0f));
}

TEST(Normalization, UnitRangeRoundTripWithinTolerance) {
  std::mt19937_64 rng(4);
  HsiCube cube(5, 5, 3);
  cube.data = oracle::random_values(75, rng, 0.0f, 1.0f);
  const auto back = denormalize(normalize_minmax(cube));
  for (std::size_t i = 0; i < 75; ++i) EXPECT_NEAR(back.data[i], cube.data[i], 1e-6);
}

TEST(MapIo, TwoByTwoPpmBytes) {
  ClassificationMap map;
  map.height = 2, map.width = 2, map.num_classes = 2;
  map.class_of = {1, 2, 2, 0};
  Palette p;
  p[1] = {{255, 0, 0}, "red"};
  p[2] = {{0, 255, 0}, "green"};
  const std::string header = "P6\n2 2\n255\n";
  std::string want = header;
  for (unsigned char v : {255, 0, 0, 0, 255, 0, 0, 255, 0, 0, 0, 0}) want += static_cast<char>(v);
  EXPECT_EQ(encode_ppm(map, p), want);

  p.erase(2);
  EXPECT_NE(message_of([&] { encode_ppm(map, p); }).find("class 2"), std::string::npos);
}

TEST(MapIo, PaletteFileRoundTrip) {
  const auto p = default_palette(5);
  EXPECT_EQ(p.size(), 5u);
  save_palette(p, temp_dir() / "pal.txt");
  const auto back = load_palette(temp_dir() / "pal.txt");
  ASSERT_EQ(back.size(), 5u);
  for (const auto& [id, e] : p) EXPECT_EQ(back.at(id).color, e.color);
  std::ofstream(temp_dir() / "badpal.txt") << "1 300 0 0 x\n";
  EXPECT_THROW(load_palette(temp_dir() / "badpal.txt"), FormatError);
}

TEST(MapIo, ProbabilityPlanesSumToOne) {
  ClassificationMap map;
  map.height = 2, map.width = 3, map.num_classes = 4;
  std::mt19937_64 rng(5);
  map.logits = oracle::random_values(24, rng, -5.0f, 5.0f);
  map.class_of.assign(6, 1);
  const auto planes = probability_planes(map);
  EXPECT_EQ(planes.bands, 4u);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0;
    for (std::size_t k = 0; k < 4; ++k) s += planes.data[k * 6 + i];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  map.logits.clear();
  EXPECT_THROW(probability_planes(map), Error);
}

TEST(Synthetic, DeterministicPerSeed) {
  SceneSpec s;
  s.height = 20, s.width = 24;
  const auto a = gen_synthetic(s), b = gen_synthetic(s);
  EXPECT_EQ(a.cube.data, b.cube.data);
  EXPECT_EQ(a.gt.labels, b.gt.labels);
  s.seed = 2;
  EXPECT_NE(gen_synthetic(s).cube.data, a.cube.data);
}

TEST(Synthetic, NoiselessPixelsEqualPrototypes) {
  SceneSpec s;
  s.height = 16, s.width = 16, s.noise_sigma = 0.0;
  const auto scene = gen_synthetic(s);
  std::vector<bool> seen(s.classes + 1, false);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) {
      const auto k = scene.gt.at(r, c);
      seen[k] = true;
      for (std::size_t b = 0; b < s.bands; ++b) ASSERT_EQ(scene.cube.at(b, r, c), scene.prototypes[k - 1][b]);
    }
  for (std::size_t k = 1; k <= s.classes; ++k) EXPECT_TRUE(seen[k]) << k;
}

TEST(Synthetic, NearestPrototypeRecoversLabels) {
  const auto scene = gen_synthetic({});
  std::size_t correct = 0;
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 64; ++c) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t k = 0; k < scene.prototypes.size(); ++k) {
        double d = 0;
        for (std::size_t b = 0; b < 8; ++b) d += std::pow(scene.cube.at(b, r, c) - scene.prototypes[k][b], 2);
        if (d < best_d) best_d = d, best = k + 1;
      }
      correct += best == scene.gt.at(r, c);
    }
  EXPECT_EQ(correct, 64u * 64u);
}

TEST(Synthetic, RegionsAreSpatiallyCoherent) {
  const auto scene = gen_synthetic({});
  std::size_t same = 0, pairs = 0;
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c + 1 < 64; ++c, ++pairs) same += scene.gt.at(r, c) == scene.gt.at(r, c + 1);
  EXPECT_GT(double(same) / double(pairs), 0.9);
}

TEST(Synthetic, UnlabeledFraction) {
  SceneSpec s;
  s.unlabeled_fraction = 0.25;
  EXPECT_EQ(gen_synthetic(s).gt.labeled_count(), 64u * 64u - 1024u);
  s.unlabeled_fraction = 1.0;
  EXPECT_THROW(gen_synthetic(s), Error);
}
