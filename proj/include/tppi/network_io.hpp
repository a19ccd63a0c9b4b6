// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "tppi/base64.hpp"
#include "tppi/network.hpp"

namespace tppi {

inline constexpr int kNetworkFormatVersion = 1;

namespace detail {

using nlohmann::json;

class JsonReader {
 public:
  JsonReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw FormatError(concat(path_, "/", key, ": ", msg));
  }

  const json& field(const std::string& key) const {
    if (!node_.is_object()) throw FormatError(concat(path_.empty() ? "/" : path_, ": expected an object"));
    auto it = node_.find(key);
    if (it == node_.end()) fail(key, "missing");
    return *it;
  }

  bool has(const std::string& key) const { return node_.is_object() && node_.contains(key); }

  std::size_t uint(const std::string& key, std::size_t min = 0) const {
    const json& v = field(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    const auto n = v.get<long long>();
    if (n < static_cast<long long>(min)) fail(key, concat("must be >= ", min, ", got ", n));
    return static_cast<std::size_t>(n);
  }

  std::vector<std::size_t> uint_array(const std::string& key, std::size_t len, std::size_t min) const {
    const json& v = field(key);
    if (!v.is_array() || v.size() != len) fail(key, concat("expected an array of ", len, " integers"));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < len; ++i) {
      if (!v[i].is_number_integer()) fail(concat(key, "/", i), "expected an integer");
      const auto n = v[i].get<long long>();
      if (n < static_cast<long long>(min)) fail(concat(key, "/", i), concat("must be >= ", min, ", got ", n));
      out.push_back(static_cast<std::size_t>(n));
    }
    return out;
  }

  std::string string(const std::string& key) const {
    const json& v = field(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  double number(const std::string& key) const {
    const json& v = field(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::vector<float> floats(const std::string& key, std::size_t expected) const {
    const json& v = field(key);
    if (!v.is_string()) fail(key, "expected a base64 string");
    std::vector<float> out;
    try {
      out = base64::decode_floats(v.get<std::string>());
    } catch (const FormatError& e) {
      fail(key, e.what());
    }
    if (out.size() != expected) fail(key, concat("expected ", expected, " values, found ", out.size()));
    return out;
  }

 private:
  const json& node_;
  std::string path_;
};

inline json layer_to_json(const LayerSpec& l) {
  json j;
  j["id"] = l.id;
  j["kind"] = std::string(to_string(l.kind));
  auto put_weights = [&] {
    if (l.weights.empty()) return;
    j["weights"] = base64::encode_floats(l.weights);
    if (!l.bias.empty()) j["bias"] = base64::encode_floats(l.bias);
  };
  switch (l.kind) {
    case LayerKind::Conv2d:
      j["in_channels"] = l.in_channels;
      j["out_channels"] = l.out_channels;
      j["kernel"] = {l.kh, l.kw};
      j["stride"] = {l.stride_h, l.stride_w};
      j["pad"] = l.pad;
      put_weights();
      break;
    case LayerKind::Conv3d:
      j["in_channels"] = l.in_channels;
      j["out_channels"] = l.out_channels;
      j["kernel"] = {l.kd, l.kh, l.kw};
      j["stride"] = {l.stride_d, l.stride_h, l.stride_w};
      j["pad_d"] = l.pad_d;
      j["pad"] = l.pad;
      put_weights();
      break;
    case LayerKind::BatchNorm:
      j["channels"] = l.in_channels;
      j["epsilon"] = static_cast<double>(l.epsilon);
      if (l.has_weights()) {
        j["gamma"] = base64::encode_floats(l.gamma);
        j["beta"] = base64::encode_floats(l.beta);
        j["running_mean"] = base64::encode_floats(l.running_mean);
        j["running_var"] = base64::encode_floats(l.running_var);
      }
      break;
    case LayerKind::AvgPool2d:
      j["kernel"] = l.kh;
      j["stride"] = {l.stride_h, l.stride_w};
      j["pad"] = l.pad;
      break;
    case LayerKind::Fc:
      j["in_features"] = l.in_features;
      j["out_features"] = l.out_features;
      put_weights();
      break;
    default:
      break;
  }
  return j;
}

inline LayerSpec layer_from_json(const json& node, const std::string& path) {
  JsonReader r(node, path);
  LayerSpec l;
  l.id = r.string("id");
  const std::string kind = r.string("kind");
  const auto k = layer_kind_from_string(kind);
  if (!k) r.fail("kind", concat("unknown layer kind '", kind, "'"));
  l.kind = *k;

  auto get_weights = [&](std::size_t outs) {
    if (!r.has("weights")) {
      if (r.has("bias")) r.fail("bias", "bias without weights");
      return;
    }
    l.weights = r.floats("weights", l.weight_count());
    if (r.has("bias")) l.bias = r.floats("bias", outs);
  };

  switch (l.kind) {
    case LayerKind::Conv2d: {
      l.in_channels = r.uint("in_channels", 1);
      l.out_channels = r.uint("out_channels", 1);
      const auto kernel = r.uint_array("kernel", 2, 1);
      const auto stride = r.uint_array("stride", 2, 1);
      l.kh = kernel[0], l.kw = kernel[1];
      l.stride_h = stride[0], l.stride_w = stride[1];
      l.pad = r.uint("pad");
      get_weights(l.out_channels);
      break;
    }
    case LayerKind::Conv3d: {
      l.in_channels = r.uint("in_channels", 1);
      l.out_channels = r.uint("out_channels", 1);
      const auto kernel = r.uint_array("kernel", 3, 1);
      const auto stride = r.uint_array("stride", 3, 1);
      l.kd = kernel[0], l.kh = kernel[1], l.kw = kernel[2];
      l.stride_d = stride[0], l.stride_h = stride[1], l.stride_w = stride[2];
      l.pad_d = r.uint("pad_d");
      l.pad = r.uint("pad");
      get_weights(l.out_channels);
      break;
    }
    case LayerKind::BatchNorm: {
      l.in_channels = l.out_channels = r.uint("channels", 1);
      l.epsilon = static_cast<float>(r.number("epsilon"));
      if (l.epsilon < 0) r.fail("epsilon", "must be >= 0");
      if (r.has("gamma")) {
        l.gamma = r.floats("gamma", l.in_channels);
        l.beta = r.floats("beta", l.in_channels);
        l.running_mean = r.floats("running_mean", l.in_channels);
        l.running_var = r.floats("running_var", l.in_channels);
        for (std::size_t i = 0; i < l.running_var.size(); ++i)
          if (!(l.running_var[i] >= 0)) r.fail(concat("running_var"), concat("entry ", i, " is negative"));
      }
      break;
    }
    case LayerKind::AvgPool2d: {
      l.kh = l.kw = r.uint("kernel", 1);
      const auto stride = r.uint_array("stride", 2, 1);
      l.stride_h = stride[0], l.stride_w = stride[1];
      l.pad = r.uint("pad");
      break;
    }
    case LayerKind::Fc:
      l.in_features = r.uint("in_features", 1);
      l.out_features = r.uint("out_features", 1);
      get_weights(l.out_features);
      break;
    default:
      break;
  }
  return l;
}

}  // namespace detail

inline nlohmann::json network_to_json(const NetworkGraph& net) {
  nlohmann::json j;
  j["format_version"] = kNetworkFormatVersion;
  j["name"] = net.name;
  j["bands"] = net.bands;
  j["sample_size_m"] = net.sample_size;
  j["num_classes"] = net.num_classes;
  j["rank"] = net.rank;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers) j["layers"].push_back(detail::layer_to_json(l));
  return j;
}

/// Parses and validates a network document. Errors name the offending node
/// with a JSON-pointer style path.
inline NetworkGraph network_from_json(const nlohmann::json& j) {
  detail::JsonReader r(j, "");
  const auto version = r.uint("format_version");
  if (version != static_cast<std::size_t>(kNetworkFormatVersion))
    r.fail("format_version", detail::concat("unsupported version ", version));
  NetworkGraph net;
  net.name = r.has("name") ? r.string("name") : "";
  net.bands = r.uint("bands", 1);
  net.sample_size = r.uint("sample_size_m", 1);
  net.num_classes = r.uint("num_classes", 1);
  net.rank = r.has("rank") ? r.uint("rank", 3) : 3;
  if (net.rank > 4) r.fail("rank", "must be 3 or 4");
  const auto& layers = r.field("layers");
  if (!layers.is_array()) r.fail("layers", "expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i)
    net.layers.push_back(detail::layer_from_json(layers[i], detail::concat("/layers/", i)));
  check_graph(net);
  return net;
}

inline void save_network(const NetworkGraph& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(detail::concat("cannot write ", path.string()));
  out << network_to_json(net).dump(1) << '\n';
  if (!out) throw Error(detail::concat("write failed: ", path.string()));
}

inline NetworkGraph load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(detail::concat("cannot open ", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(detail::concat(path.string(), ": ", e.what()));
  }
  return network_from_json(j);
}

}  // namespace tppi
