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

#pragma once

#include <string>
#include <vector>

#include "mpc3/bilinear.h"
#include "mpc3/ring.h"
#include "mpc3/sharing.h"

namespace mpc3::nn {

enum class LayerKind { kConv2d, kFullyConnected, kAvgPool, kReLU, kFlatten };

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  // Conv2d and AvgPool.
  size_t out_channels = 0;
  size_t kernel = 0;
  size_t stride = 1;
  size_t padding = 0;
  // FullyConnected.
  size_t out_features = 0;

  // Filled by ModelSpec::resolve; per-sample shapes without the batch axis.
  Shape in_shape;
  Shape out_shape;

  bool has_params() const {
    return kind == LayerKind::kConv2d || kind == LayerKind::kFullyConnected;
  }
  Conv2dGeometry geometry(size_t batch) const;
  size_t fan_in() const;
  Shape weight_shape() const;
  Shape bias_shape() const;
};

struct ModelSpec {
  std::string name;
  Shape input;  // [C, H, W]
  size_t classes = 0;
  std::vector<LayerSpec> layers;
  // Optional initializer reference, resolved relative to the spec file.
  std::string weights_path;

  static ModelSpec parse(const std::string& json_text,
                         const std::string& base_dir = ".");
  static ModelSpec load(const std::string& path);

  // Computes layer shapes; throws GeometryError on incompatible layers.
  void resolve();
  std::vector<Shape> param_shapes() const;
  size_t param_count() const;
  size_t first_param_layer() const;
};

// Weight files: a sequence of records, one per parameter tensor, each
// "MPCW" | u32 frac_bits | u32 ndim | u64 dims[ndim] | u64 words[].
// All little-endian.
void save_weights(const std::string& path, const std::vector<RingTensor>& ws,
                  int frac_bits);
std::vector<RingTensor> load_weights(const std::string& path, int* frac_bits);

// Plaintext init: weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
std::vector<std::vector<double>> init_params(const ModelSpec& spec, uint64_t seed);

std::vector<RingTensor> encode_params(const ModelSpec& spec,
                                      const std::vector<std::vector<double>>& ps,
                                      const FixedPointConfig& fx);
std::vector<std::vector<double>> decode_params(const std::vector<RingTensor>& ps,
                                               const FixedPointConfig& fx);

// Weights named by the spec, or the seeded initializer when it names none.
std::vector<std::vector<double>> initial_params(const ModelSpec& spec,
                                                uint64_t seed);

}  // namespace mpc3::nn
