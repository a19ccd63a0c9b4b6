// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tppi/error.hpp"
#include "tppi/kernels.hpp"
#include "tppi/map.hpp"
#include "tppi/tensor.hpp"

namespace tppi {

struct Normalization {
  enum class Kind { none, minmax };
  Kind kind = Kind::none;
  // normalized = (raw - offset[b]) / scale[b]
  std::vector<float> offset, scale;
};

/// Hyperspectral cube stored band-sequential: B planes of H×W, i.e. the same
/// layout as a [B, H, W] tensor.
struct HsiCube {
  std::size_t height = 0, width = 0, bands = 0;
  std::vector<float> data;
  std::string name;
  Normalization normalization;

  HsiCube() = default;
  HsiCube(std::size_t h, std::size_t w, std::size_t b, std::string n = {})
      : height(h), width(w), bands(b), data(h * w * b, 0.0f), name(std::move(n)) {}

  float& at(std::size_t b, std::size_t r, std::size_t c) { return data[(b * height + r) * width + c]; }
  float at(std::size_t b, std::size_t r, std::size_t c) const { return data[(b * height + r) * width + c]; }

  void validate() const {
    if (!height || !width || !bands) throw ShapeError("cube dimensions must be positive");
    if (data.size() != height * width * bands)
      throw ShapeError(detail::concat("cube ", height, "x", width, "x", bands, " needs ", height * width * bands,
                                      " values, has ", data.size()));
  }

  Tensor tensor() const { return Tensor({bands, height, width}, data); }
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct PaletteEntry {
  Rgb color;
  std::string name;
};

using Palette = std::map<std::uint16_t, PaletteEntry>;

/// Label raster; 0 marks unlabeled pixels.
struct GroundTruth {
  std::size_t height = 0, width = 0;
  std::vector<std::uint16_t> labels;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;

  std::uint16_t at(std::size_t r, std::size_t c) const { return labels[r * width + c]; }
  std::uint16_t& at(std::size_t r, std::size_t c) { return labels[r * width + c]; }

  std::size_t labeled_count() const {
    return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
  }

  void validate() const {
    if (labels.size() != height * width)
      throw ShapeError(detail::concat("ground truth ", height, "x", width, " has ", labels.size(), " labels"));
    for (auto v : labels)
      if (v > num_classes) throw ShapeError(detail::concat("label ", v, " exceeds class count ", num_classes));
  }
};

// ---------------------------------------------------------------------------
// Patches

/// m×m neighbourhood of (row, col) as a [B, m, m] tensor, with borders
/// reflected exactly like pad_mirror.
template <typename T = float>
BasicTensor<T> extract_patch(const HsiCube& cube, std::size_t row, std::size_t col, std::size_t m) {
  if (m % 2 == 0) throw ShapeError(detail::concat("patch size m = ", m, " must be odd"));
  const std::size_t half = m / 2;
  if (half && (half >= cube.height || half >= cube.width))
    throw ShapeError(detail::concat("patch size ", m, " needs a cube of at least ", half + 1, "x", half + 1));
  BasicTensor<T> p({cube.bands, m, m});
  std::vector<std::size_t> rows(m), cols(m);
  for (std::size_t i = 0; i < m; ++i) {
    rows[i] = reflect_index(static_cast<long>(row + i) - static_cast<long>(half), cube.height);
    cols[i] = reflect_index(static_cast<long>(col + i) - static_cast<long>(half), cube.width);
  }
  T* dst = p.data().data();
  for (std::size_t b = 0; b < cube.bands; ++b)
    for (std::size_t i = 0; i < m; ++i) {
      const float* src = cube.data.data() + (b * cube.height + rows[i]) * cube.width;
      for (std::size_t j = 0; j < m; ++j) *dst++ = static_cast<T>(src[cols[j]]);
    }
  return p;
}

// ---------------------------------------------------------------------------
// Normalization

/// Per-band min-max scaling to [0, 1]; the applied transform is recorded.
inline HsiCube normalize_minmax(HsiCube cube) {
  if (cube.normalization.kind != Normalization::Kind::none) throw Error("cube is already normalized");
  const std::size_t plane = cube.height * cube.width;
  cube.normalization.kind = Normalization::Kind::minmax;
  cube.normalization.offset.resize(cube.bands);
  cube.normalization.scale.resize(cube.bands);
  for (std::size_t b = 0; b < cube.bands; ++b) {
    float* v = cube.data.data() + b * plane;
    const auto [lo, hi] = std::minmax_element(v, v + plane);
    const float offset = *lo;
    const float scale = *hi > *lo ? *hi - *lo : 1.0f;
    for (std::size_t i = 0; i < plane; ++i) v[i] = (v[i] - offset) / scale;
    cube.normalization.offset[b] = offset;
    cube.normalization.scale[b] = scale;
  }
  return cube;
}

inline HsiCube denormalize(HsiCube cube) {
  if (cube.normalization.kind == Normalization::Kind::none) return cube;
  const std::size_t plane = cube.height * cube.width;
  for (std::size_t b = 0; b < cube.bands; ++b) {
    float* v = cube.data.data() + b * plane;
    for (std::size_t i = 0; i < plane; ++i) v[i] = v[i] * cube.normalization.scale[b] + cube.normalization.offset[b];
  }
  cube.normalization = {};
  return cube;
}

// ---------------------------------------------------------------------------
// File formats: JSON sidecar header + raw little-endian payload.

namespace detail {

inline std::filesystem::path payload_path(const std::filesystem::path& header, const std::string& data_file) {
  return header.parent_path() / data_file;
}

template <typename U>
void write_le(std::ostream& out, std::span<const U> values) {
  static_assert(sizeof(U) == 2 || sizeof(U) == 4);
  using Bits = std::conditional_t<sizeof(U) == 2, std::uint16_t, std::uint32_t>;
  std::vector<char> bytes(values.size() * sizeof(U));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Bits bits = std::bit_cast<Bits>(values[i]);
    for (std::size_t k = 0; k < sizeof(U); ++k) bytes[i * sizeof(U) + k] = static_cast<char>((bits >> (8 * k)) & 0xff);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename U>
std::vector<U> read_le(const std::filesystem::path& path, std::size_t count) {
  using Bits = std::conditional_t<sizeof(U) == 2, std::uint16_t, std::uint32_t>;
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(concat("cannot open ", path.string()));
  const auto actual = static_cast<std::size_t>(in.tellg());
  const std::size_t expected = count * sizeof(U);
  if (actual != expected)
    throw FormatError(concat(path.string(), ": header implies ", expected, " bytes, payload has ", actual));
  in.seekg(0);
  std::vector<unsigned char> bytes(expected);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
  std::vector<U> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    Bits bits = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) bits |= static_cast<Bits>(Bits(bytes[i * sizeof(U) + k]) << (8 * k));
    out[i] = std::bit_cast<U>(bits);
  }
  return out;
}

inline nlohmann::json read_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(concat("cannot open ", path.string()));
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(concat(path.string(), ": ", e.what()));
  }
}

inline void write_header(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(concat("cannot write ", path.string()));
  out << j.dump(1) << '\n';
}

inline std::size_t header_uint(const nlohmann::json& j, const char* key, const std::filesystem::path& path) {
  if (!j.contains(key) || !j[key].is_number_unsigned() || j[key].get<std::size_t>() == 0)
    throw FormatError(concat(path.string(), ": /", key, ": expected a positive integer"));
  return j[key].get<std::size_t>();
}

inline void header_expect(const nlohmann::json& j, const char* key, const char* value,
                          const std::filesystem::path& path) {
  if (!j.contains(key) || j[key] != value)
    throw FormatError(concat(path.string(), ": /", key, ": expected \"", value, "\""));
}

inline std::string data_file_name(const std::filesystem::path& header, const char* ext) {
  return header.stem().string() + ext;
}

}  // namespace detail

/// Writes `path` (JSON header) and a sibling `<stem>.f32` payload.
inline void save_cube(const HsiCube& cube, const std::filesystem::path& path) {
  cube.validate();
  const std::string data_file = detail::data_file_name(path, ".f32");
  nlohmann::json h = {{"format_version", 1},     {"height", cube.height},
                      {"width", cube.width},     {"bands", cube.bands},
                      {"dtype", "f32le"},        {"order", "band-sequential"},
                      {"name", cube.name},       {"data_file", data_file}};
  nlohmann::json norm = {{"kind", cube.normalization.kind == Normalization::Kind::minmax ? "minmax" : "none"}};
  if (cube.normalization.kind != Normalization::Kind::none) {
    norm["offset"] = std::vector<double>(cube.normalization.offset.begin(), cube.normalization.offset.end());
    norm["scale"] = std::vector<double>(cube.normalization.scale.begin(), cube.normalization.scale.end());
  }
  h["normalization"] = norm;
  detail::write_header(path, h);
  std::ofstream out(detail::payload_path(path, data_file), std::ios::binary);
  if (!out) throw Error(detail::concat("cannot write payload for ", path.string()));
  detail::write_le<float>(out, cube.data);
}

inline HsiCube load_cube(const std::filesystem::path& path) {
  const auto h = detail::read_header(path);
  detail::header_expect(h, "dtype", "f32le", path);
  detail::header_expect(h, "order", "band-sequential", path);
  HsiCube cube;
  cube.height = detail::header_uint(h, "height", path);
  cube.width = detail::header_uint(h, "width", path);
  cube.bands = detail::header_uint(h, "bands", path);
  cube.name = h.value("name", std::string{});
  if (!h.contains("data_file") || !h["data_file"].is_string())
    throw FormatError(detail::concat(path.string(), ": /data_file: expected a string"));
  cube.data = detail::read_le<float>(detail::payload_path(path, h["data_file"].get<std::string>()),
                                     cube.height * cube.width * cube.bands);
  const auto bad = std::count_if(cube.data.begin(), cube.data.end(), [](float v) { return !std::isfinite(v); });
  if (bad) throw FormatError(detail::concat(path.string(), ": payload holds ", bad, " non-finite values"));
  if (h.contains("normalization") && h["normalization"].value("kind", "none") == std::string("minmax")) {
    const auto& n = h["normalization"];
    cube.normalization.kind = Normalization::Kind::minmax;
    for (double v : n.at("offset")) cube.normalization.offset.push_back(static_cast<float>(v));
    for (double v : n.at("scale")) cube.normalization.scale.push_back(static_cast<float>(v));
    if (cube.normalization.offset.size() != cube.bands || cube.normalization.scale.size() != cube.bands)
      throw FormatError(detail::concat(path.string(), ": /normalization: expected ", cube.bands, " entries"));
  }
  return cube;
}

/// Writes `path` (JSON header) and a sibling `<stem>.u16` payload.
inline void save_gt(const GroundTruth& gt, const std::filesystem::path& path) {
  gt.validate();
  const std::string data_file = detail::data_file_name(path, ".u16");
  nlohmann::json h = {{"format_version", 1},       {"height", gt.height},       {"width", gt.width},
                      {"dtype", "u16le"},          {"num_classes", gt.num_classes},
                      {"class_names", gt.class_names}, {"data_file", data_file}};
  detail::write_header(path, h);
  std::ofstream out(detail::payload_path(path, data_file), std::ios::binary);
  if (!out) throw Error(detail::concat("cannot write payload for ", path.string()));
  detail::write_le<std::uint16_t>(out, gt.labels);
}

inline GroundTruth load_gt(const std::filesystem::path& path) {
  const auto h = detail::read_header(path);
  detail::header_expect(h, "dtype", "u16le", path);
  GroundTruth gt;
  gt.height = detail::header_uint(h, "height", path);
  gt.width = detail::header_uint(h, "width", path);
  gt.num_classes = h.value("num_classes", std::size_t{0});
  if (h.contains("class_names")) gt.class_names = h["class_names"].get<std::vector<std::string>>();
  if (!h.contains("data_file") || !h["data_file"].is_string())
    throw FormatError(detail::concat(path.string(), ": /data_file: expected a string"));
  gt.labels = detail::read_le<std::uint16_t>(detail::payload_path(path, h["data_file"].get<std::string>()),
                                             gt.height * gt.width);
  const auto mx = gt.labels.empty() ? 0 : *std::max_element(gt.labels.begin(), gt.labels.end());
  gt.num_classes = std::max<std::size_t>(gt.num_classes, mx);
  return gt;
}

/// Evenly spread hues; class 0 stays black.
inline Palette default_palette(std::size_t classes) {
  Palette p;
  for (std::size_t c = 1; c <= classes; ++c) {
    const double hue = 6.0 * double(c - 1) / double(classes);
    const int sector = static_cast<int>(hue) % 6;
    const double f = hue - std::floor(hue);
    const auto up = static_cast<std::uint8_t>(std::lround(255 * f));
    const auto down = static_cast<std::uint8_t>(255 - up);
    static constexpr std::array<std::array<int, 3>, 6> kPattern = {
        {{0, 1, 2}, {1, 0, 2}, {2, 0, 1}, {2, 1, 0}, {1, 2, 0}, {0, 2, 1}}};
    std::uint8_t rgb[3];
    // channel roles per sector: full, rising/falling, zero
    rgb[kPattern[sector][0]] = 255;
    rgb[kPattern[sector][1]] = sector % 2 == 0 ? up : down;
    rgb[kPattern[sector][2]] = 0;
    p[static_cast<std::uint16_t>(c)] = {{rgb[0], rgb[1], rgb[2]}, "class_" + std::to_string(c)};
  }
  return p;
}

/// Palette file: one "class_id R G B name" line per class.
inline Palette load_palette(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(detail::concat("cannot open ", path.string()));
  Palette p;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int id, r, g, b;
    if (!(ls >> id >> r >> g >> b) || id < 0 || id > 65535 || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 ||
        b > 255)
      throw FormatError(detail::concat(path.string(), ":", n, ": expected \"class_id R G B name\""));
    std::string name;
    std::getline(ls >> std::ws, name);
    p[static_cast<std::uint16_t>(id)] = {{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                          static_cast<std::uint8_t>(b)},
                                         name};
  }
  return p;
}

inline void save_palette(const Palette& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(detail::concat("cannot write ", path.string()));
  for (const auto& [id, e] : p) out << id << ' ' << int(e.color.r) << ' ' << int(e.color.g) << ' ' << int(e.color.b) << ' ' << e.name << '\n';
}

/// Binary PPM (P6): "P6\n<width> <height>\n255\n" then width·height RGB
/// triples, row-major from the top-left. Class 0 is black.
inline std::string encode_ppm(const ClassificationMap& map, const Palette& palette) {
  std::string out = detail::concat("P6\n", map.width, " ", map.height, "\n255\n");
  out.reserve(out.size() + map.class_of.size() * 3);
  for (auto cls : map.class_of) {
    Rgb c;
    if (cls) {
      auto it = palette.find(cls);
      if (it == palette.end()) throw Error(detail::concat("class ", cls, " has no palette entry"));
      c = it->second.color;
    }
    out += static_cast<char>(c.r);
    out += static_cast<char>(c.g);
    out += static_cast<char>(c.b);
  }
  return out;
}

inline void save_map(const ClassificationMap& map, const Palette& palette, const std::filesystem::path& path) {
  const std::string bytes = encode_ppm(map, palette);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(detail::concat("cannot write ", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Class raster in the ground-truth container (so maps can be scored later).
inline GroundTruth map_as_labels(const ClassificationMap& map) {
  GroundTruth gt;
  gt.height = map.height;
  gt.width = map.width;
  gt.labels = map.class_of;
  gt.num_classes = map.num_classes;
  return gt;
}

/// Softmax of retained logits as a C-band cube; bands sum to 1 per pixel.
inline HsiCube probability_planes(const ClassificationMap& map) {
  if (!map.has_logits()) throw Error("map has no retained logits");
  HsiCube cube(map.height, map.width, map.num_classes, "probabilities");
  Tensor t({map.num_classes, map.height, map.width}, map.logits);
  cube.data = softmax(std::move(t)).storage();
  return cube;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

struct SceneSpec {
  std::size_t height = 64, width = 64, bands = 8, classes = 4;
  std::size_t regions = 0;  // Voronoi cells; 0 means 3·classes
  double noise_sigma = 0.03;
  double min_prototype_gap = 0.0;  // L2; 0 means 0.25·sqrt(bands)
  double unlabeled_fraction = 0.0;
  std::uint64_t seed = 1;
};

struct SyntheticScene {
  HsiCube cube;
  GroundTruth gt;
  std::vector<std::vector<float>> prototypes;  // [class-1][band]
};

/// Seeded Voronoi scene: every cell takes a class, every class owns at least
/// one cell, and each pixel is its class prototype plus Gaussian noise.
inline SyntheticScene gen_synthetic(const SceneSpec& spec) {
  const std::size_t H = spec.height, W = spec.width, B = spec.bands, C = spec.classes;
  if (!H || !W || !B || !C) throw Error("gen_synthetic: dimensions must be positive");
  if (C > 255) throw Error("gen_synthetic: at most 255 classes");
  if (H * W < C) throw Error("gen_synthetic: fewer pixels than classes");
  const std::size_t R = std::min(H * W, std::max(C, spec.regions ? spec.regions : 3 * C));
  const double gap = spec.min_prototype_gap > 0 ? spec.min_prototype_gap : 0.25 * std::sqrt(double(B));
  if (spec.unlabeled_fraction < 0 || spec.unlabeled_fraction >= 1)
    throw Error("gen_synthetic: unlabeled fraction must be in [0, 1)");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticScene scene;

  // Smooth prototypes: a few low-frequency sinusoids, rescaled into [0.1, 0.9].
  for (int attempts = 0; scene.prototypes.size() < C; ++attempts) {
    if (attempts > 20000) throw Error("gen_synthetic: cannot place prototypes with the requested gap");
    std::vector<double> curve(B, 0.0);
    for (int k = 0; k < 3; ++k) {
      const double amp = unit(rng), freq = 0.5 + 2.0 * unit(rng), phase = 6.283185307179586 * unit(rng);
      for (std::size_t b = 0; b < B; ++b)
        curve[b] += amp * std::sin(6.283185307179586 * freq * double(b) / double(B) + phase);
    }
    const double level = unit(rng);
    const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end());
    const double span = *hi - *lo;
    std::vector<float> proto(B);
    for (std::size_t b = 0; b < B; ++b) {
      const double shape = span > 1e-12 ? (curve[b] - *lo) / span : 0.5;
      proto[b] = static_cast<float>(0.1 + 0.8 * (0.5 * level + 0.5 * shape));
    }
    bool ok = true;
    for (const auto& other : scene.prototypes) {
      double d = 0;
      for (std::size_t b = 0; b < B; ++b) d += (proto[b] - other[b]) * (proto[b] - other[b]);
      if (std::sqrt(d) < gap) ok = false;
    }
    if (ok) scene.prototypes.push_back(std::move(proto));
  }

  // Distinct seed pixels; the first C cells cover every class once.
  std::vector<std::size_t> all(H * W);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<std::size_t> seeds(all.begin(), all.begin() + static_cast<long>(R));
  std::vector<std::uint16_t> cell_class(R);
  for (std::size_t i = 0; i < R; ++i)
    cell_class[i] = static_cast<std::uint16_t>(
        i < C ? i + 1 : std::uniform_int_distribution<std::size_t>(1, C)(rng));

  scene.gt.height = H;
  scene.gt.width = W;
  scene.gt.num_classes = C;
  scene.gt.labels.assign(H * W, 0);
  for (std::size_t c = 1; c <= C; ++c) scene.gt.class_names.push_back("class_" + std::to_string(c));
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      std::size_t best = 0;
      long best_d = std::numeric_limits<long>::max();
      for (std::size_t s = 0; s < R; ++s) {
        const long dr = long(seeds[s] / W) - long(r), dc = long(seeds[s] % W) - long(c);
        const long d = dr * dr + dc * dc;
        if (d < best_d) best_d = d, best = s;
      }
      scene.gt.at(r, c) = cell_class[best];
    }

  scene.cube = HsiCube(H, W, B, detail::concat("synthetic-", H, "x", W, "x", B, "-c", C, "-s", spec.seed));
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        const float base = scene.prototypes[scene.gt.at(r, c) - 1][b];
        scene.cube.at(b, r, c) = spec.noise_sigma > 0 ? static_cast<float>(base + noise(rng)) : base;
      }

  if (spec.unlabeled_fraction > 0) {
    std::shuffle(all.begin(), all.end(), rng);
    const auto hidden = static_cast<std::size_t>(std::floor(spec.unlabeled_fraction * double(H * W)));
    for (std::size_t i = 0; i < hidden; ++i) scene.gt.labels[all[i]] = 0;
  }
  return scene;
}

}  // namespace tppi
