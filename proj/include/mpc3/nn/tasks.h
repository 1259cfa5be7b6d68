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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mpc3/context.h"
#include "mpc3/nn/mnist.h"
#include "mpc3/nn/model.h"

namespace mpc3::nn {

using PlainParams = std::vector<std::vector<double>>;

// P1 owns the model and the data. Other parties pass nullptr and learn only
// shapes from the spec.
std::vector<ArithmeticShare> share_params(PartyContext& ctx, const ModelSpec& spec,
                                          const PlainParams* params);
ArithmeticShare share_plain(PartyContext& ctx, const std::vector<double>* values,
                            const Shape& shape);

// Private logits [n, classes] revealed to P1 only.
std::optional<RingTensor> private_inference(PartyContext& ctx,
                                            const ModelSpec& spec,
                                            const PlainParams* params,
                                            const std::vector<double>* images,
                                            size_t n, size_t batch);

std::vector<double> float_inference(const ModelSpec& spec, const PlainParams& params,
                                    const std::vector<double>& images, size_t n);
RingTensor fixed_inference(const ModelSpec& spec, const PlainParams& params,
                           const std::vector<double>& images, size_t n,
                           const FixedPointConfig& fx);

struct TrainConfig {
  size_t iterations = 100;
  size_t batch = 128;
  double lr = 0.05;
  // Training set is the first `samples` examples; batches cycle over it.
  size_t samples = 1280;
  // Reveal logits to P1 each iteration (testing aid, costs one extra round).
  bool track_logits = false;
};

// iteration, logits [batch, classes] as reals, labels of the batch.
using LogitsHook = std::function<void(size_t, const std::vector<double>&,
                                      const std::vector<uint8_t>&)>;

// Returns the trained parameters revealed to P1.
std::optional<std::vector<RingTensor>> private_train(
    PartyContext& ctx, const ModelSpec& spec, const PlainParams* params,
    const Dataset* data, const TrainConfig& cfg, const LogitsHook& hook = {});
std::vector<RingTensor> fixed_train(const ModelSpec& spec, const PlainParams& params,
                                    const Dataset& data, const TrainConfig& cfg,
                                    const FixedPointConfig& fx,
                                    const LogitsHook& hook = {});
PlainParams float_train(const ModelSpec& spec, const PlainParams& params,
                        const Dataset& data, const TrainConfig& cfg,
                        const LogitsHook& hook = {});

// Row indices used by training iteration `it`.
std::vector<size_t> batch_rows(size_t it, size_t batch, size_t samples);

// Metrics over [n, d] logits.
std::vector<size_t> argmax_rows(const std::vector<double>& z, size_t n, size_t d);
double mean_relative_error(const std::vector<double>& z, const std::vector<double>& ref,
                           size_t n, size_t d);
double cross_entropy(const std::vector<double>& z, const std::vector<uint8_t>& labels,
                     size_t n, size_t d);
std::vector<double> decode(const RingTensor& t, const FixedPointConfig& fx);

struct BenchRow {
  std::string op;
  size_t n = 0;
  double time_ms = 0;
  uint64_t bytes = 0;   // sent by this party
  uint64_t rounds = 0;
  std::string line() const;
};

// conv2d_shares on an n x n x 3 input, 11x11 kernel, 64 channels, stride 4,
// including input sharing of image and kernel.
BenchRow bench_conv(PartyContext& ctx, size_t n);
// relu on `elements` values, including input sharing.
BenchRow bench_relu(PartyContext& ctx, size_t elements);

struct SweepRow {
  int t = 0;
  size_t n = 0;
  double rel_error = 0;
  std::string line() const;
};

// Private inference at each t; errors against the float model, known to P1.
std::vector<SweepRow> precision_sweep(PartyContext& ctx, const ModelSpec& spec,
                                      const PlainParams* params,
                                      const std::vector<double>* images, size_t n,
                                      const std::vector<int>& ts, size_t batch);

}  // namespace mpc3::nn
