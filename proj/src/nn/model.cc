// Copyright 2026 The mpc3 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mpc3/nn/model.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mpc3/errors.h"

namespace mpc3::nn {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv2d:
      return "conv2d";
    case LayerKind::kFullyConnected:
      return "fc";
    case LayerKind::kAvgPool:
      return "avgpool";
    case LayerKind::kReLU:
      return "relu";
    case LayerKind::kFlatten:
      return "flatten";
  }
  return "?";
}

Conv2dGeometry LayerSpec::geometry(size_t batch) const {
  MPC3_ENFORCE(in_shape.size() == 3, GeometryError,
               std::string(layer_kind_name(kind)) + " needs a [C, H, W] input");
  Conv2dGeometry g;
  g.batch = batch;
  g.in_c = in_shape[0];
  g.in_h = in_shape[1];
  g.in_w = in_shape[2];
  g.out_c = kind == LayerKind::kConv2d ? out_channels : in_shape[0];
  g.kh = g.kw = kernel;
  g.stride = stride;
  g.pad = padding;
  return g;
}

size_t LayerSpec::fan_in() const {
  if (kind == LayerKind::kConv2d) return in_shape[0] * kernel * kernel;
  if (kind == LayerKind::kFullyConnected) return in_shape[0];
  return 0;
}

Shape LayerSpec::weight_shape() const {
  if (kind == LayerKind::kConv2d)
    return {out_channels, in_shape[0], kernel, kernel};
  return {out_features, in_shape[0]};
}

Shape LayerSpec::bias_shape() const {
  return {kind == LayerKind::kConv2d ? out_channels : out_features};
}

namespace {

size_t get_size(const json& j, const char* key, size_t dflt, bool required) {
  if (!j.contains(key)) {
    MPC3_ENFORCE(!required, FormatError,
                 std::string("model spec: layer is missing '") + key + "'");
    return dflt;
  }
  MPC3_ENFORCE(j.at(key).is_number_unsigned(), FormatError,
               std::string("model spec: '") + key +
                   "' must be a non-negative integer");
  return j.at(key).get<size_t>();
}

}  // namespace

ModelSpec ModelSpec::parse(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model spec: ") + e.what());
  }
  ModelSpec m;
  try {
    m.name = j.value("name", "model");
    m.input = j.at("input").get<Shape>();
    m.classes = j.at("classes").get<size_t>();
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      const std::string kind = lj.at("kind").get<std::string>();
      if (kind == "conv2d") {
        l.kind = LayerKind::kConv2d;
        l.out_channels = get_size(lj, "out_channels", 0, true);
        l.kernel = get_size(lj, "kernel", 0, true);
        l.stride = get_size(lj, "stride", 1, false);
        l.padding = get_size(lj, "padding", 0, false);
      } else if (kind == "fc") {
        l.kind = LayerKind::kFullyConnected;
        l.out_features = get_size(lj, "out_features", 0, true);
      } else if (kind == "avgpool") {
        l.kind = LayerKind::kAvgPool;
        l.kernel = get_size(lj, "kernel", 0, true);
        l.stride = get_size(lj, "stride", l.kernel, false);
        l.padding = get_size(lj, "padding", 0, false);
      } else if (kind == "relu") {
        l.kind = LayerKind::kReLU;
      } else if (kind == "flatten") {
        l.kind = LayerKind::kFlatten;
      } else {
        throw FormatError("model spec: unknown layer kind '" + kind + "'");
      }
      m.layers.push_back(l);
    }
    if (j.contains("weights")) {
      fs::path w = j.at("weights").get<std::string>();
      if (w.is_relative()) w = fs::path(base_dir) / w;
      m.weights_path = w.string();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("model spec: ") + e.what());
  }
  m.resolve();
  return m;
}

ModelSpec ModelSpec::load(const std::string& path) {
  std::ifstream in(path);
  MPC3_ENFORCE(in.good(), FormatError, "cannot open model spec " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), fs::path(path).parent_path().string());
}

void ModelSpec::resolve() {
  MPC3_ENFORCE(input.size() == 3, GeometryError,
               "model input must be [C, H, W]");
  MPC3_ENFORCE(classes >= 1, GeometryError, "model needs at least one class");
  Shape cur = input;
  for (auto& l : layers) {
    l.in_shape = cur;
    switch (l.kind) {
      case LayerKind::kConv2d:
      case LayerKind::kAvgPool: {
        MPC3_ENFORCE(cur.size() == 3, GeometryError,
                     std::string(layer_kind_name(l.kind)) +
                         " after flatten is not supported");
        const auto g = l.geometry(1);
        g.validate();
        cur = {g.out_c, g.out_h(), g.out_w()};
        break;
      }
      case LayerKind::kFullyConnected:
        MPC3_ENFORCE(cur.size() == 1, GeometryError,
                     "fc layer needs a flattened input");
        MPC3_ENFORCE(l.out_features >= 1, GeometryError, "fc with no outputs");
        cur = {l.out_features};
        break;
      case LayerKind::kReLU:
        break;
      case LayerKind::kFlatten:
        cur = {numel(cur)};
        break;
    }
    l.out_shape = cur;
  }
  MPC3_ENFORCE(cur == Shape({classes}), GeometryError,
               "model output " + shape_str(cur) + " does not match " +
                   std::to_string(classes) + " classes");
}

std::vector<Shape> ModelSpec::param_shapes() const {
  std::vector<Shape> out;
  for (const auto& l : layers)
    if (l.has_params()) {
      out.push_back(l.weight_shape());
      out.push_back(l.bias_shape());
    }
  return out;
}

size_t ModelSpec::param_count() const {
  size_t n = 0;
  for (const auto& s : param_shapes()) n += numel(s);
  return n;
}

size_t ModelSpec::first_param_layer() const {
  for (size_t i = 0; i < layers.size(); ++i)
    if (layers[i].has_params()) return i;
  return layers.size();
}

namespace {

constexpr char kWeightMagic[4] = {'M', 'P', 'C', 'W'};

template <class T>
void put(std::ostream& o, T v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
bool get(std::istream& i, T& v) {
  return static_cast<bool>(i.read(reinterpret_cast<char*>(&v), sizeof(v)));
}

}  // namespace

void save_weights(const std::string& path, const std::vector<RingTensor>& ws,
                  int frac_bits) {
  static_assert(std::endian::native == std::endian::little);
  std::ofstream o(path, std::ios::binary);
  MPC3_ENFORCE(o.good(), FormatError, "cannot write " + path);
  for (const auto& w : ws) {
    o.write(kWeightMagic, 4);
    put<uint32_t>(o, static_cast<uint32_t>(frac_bits));
    put<uint32_t>(o, static_cast<uint32_t>(w.shape.size()));
    for (size_t d : w.shape) put<uint64_t>(o, d);
    o.write(reinterpret_cast<const char*>(w.data.data()),
            static_cast<std::streamsize>(w.size() * 8));
  }
  MPC3_ENFORCE(o.good(), FormatError, "write failed: " + path);
}

std::vector<RingTensor> load_weights(const std::string& path, int* frac_bits) {
  std::ifstream in(path, std::ios::binary);
  MPC3_ENFORCE(in.good(), FormatError, "cannot open weights " + path);
  std::vector<RingTensor> out;
  int t = -1;
  for (;;) {
    char magic[4];
    if (!in.read(magic, 4)) break;
    MPC3_ENFORCE(std::memcmp(magic, kWeightMagic, 4) == 0, FormatError,
                 path + ": bad weight record magic");
    uint32_t rt = 0, ndim = 0;
    MPC3_ENFORCE(get(in, rt) && get(in, ndim) && ndim <= 8, FormatError,
                 path + ": truncated weight header");
    MPC3_ENFORCE(t < 0 || static_cast<int>(rt) == t, FormatError,
                 path + ": mixed fixed-point widths");
    t = static_cast<int>(rt);
    Shape s(ndim);
    for (auto& d : s)
      MPC3_ENFORCE(get(in, d), FormatError, path + ": truncated shape");
    RingTensor w(s);
    MPC3_ENFORCE(in.read(reinterpret_cast<char*>(w.data.data()),
                         static_cast<std::streamsize>(w.size() * 8)),
                 FormatError, path + ": truncated weight data");
    out.push_back(std::move(w));
  }
  MPC3_ENFORCE(!out.empty(), FormatError, path + ": no weight records");
  if (frac_bits) *frac_bits = t;
  return out;
}

std::vector<std::vector<double>> init_params(const ModelSpec& spec,
                                             uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> out;
  for (const auto& l : spec.layers) {
    if (!l.has_params()) continue;
    // He uniform for weights, 1/sqrt(fan_in) for biases.
    const double fan = static_cast<double>(l.fan_in());
    std::uniform_real_distribution<double> uw(-std::sqrt(6.0 / fan),
                                              std::sqrt(6.0 / fan));
    std::uniform_real_distribution<double> ub(-1.0 / std::sqrt(fan),
                                              1.0 / std::sqrt(fan));
    std::vector<double> w(numel(l.weight_shape())), b(numel(l.bias_shape()));
    for (auto& x : w) x = uw(rng);
    for (auto& x : b) x = ub(rng);
    out.push_back(std::move(w));
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<RingTensor> encode_params(const ModelSpec& spec,
                                      const std::vector<std::vector<double>>& ps,
                                      const FixedPointConfig& fx) {
  const auto shapes = spec.param_shapes();
  MPC3_ENFORCE(shapes.size() == ps.size(), ShapeError,
               "parameter count does not match the model");
  std::vector<RingTensor> out;
  for (size_t i = 0; i < ps.size(); ++i)
    out.push_back(fx_encode(ps[i], shapes[i], fx));
  return out;
}

std::vector<std::vector<double>> decode_params(const std::vector<RingTensor>& ps,
                                               const FixedPointConfig& fx) {
  std::vector<std::vector<double>> out;
  for (const auto& p : ps) out.push_back(fx_decode(p, fx));
  return out;
}

std::vector<std::vector<double>> initial_params(const ModelSpec& spec,
                                                uint64_t seed) {
  if (spec.weights_path.empty()) return init_params(spec, seed);
  int t = 0;
  auto ws = load_weights(spec.weights_path, &t);
  const auto shapes = spec.param_shapes();
  MPC3_ENFORCE(ws.size() == shapes.size(), FormatError,
               spec.weights_path + ": expected " +
                   std::to_string(shapes.size()) + " tensors");
  for (size_t i = 0; i < ws.size(); ++i)
    MPC3_ENFORCE(ws[i].shape == shapes[i], FormatError,
                 spec.weights_path + ": tensor " + std::to_string(i) +
                     " has shape " + shape_str(ws[i].shape));
  FixedPointConfig fx;
  fx.t = t;
  fx.validate();
  return decode_params(ws, fx);
}

}  // namespace mpc3::nn
