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

#include <vector>

#include "mpc3/errors.h"
#include "mpc3/nn/backends.h"
#include "mpc3/nn/model.h"

namespace mpc3::nn {

// Cache of the forward pass needed by backward.
template <class B>
struct Activations {
  using T = typename B::Tensor;
  size_t batch = 0;
  std::vector<T> inputs;  // input of each layer
  std::vector<T> masks;   // drelu mask at ReLU layers, empty elsewhere
  T output;
};

inline Shape batched(size_t batch, const Shape& s) {
  Shape out{batch};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

// params: weight and bias per parameterised layer, in layer order.
template <class B>
typename B::Tensor forward(B& be, const ModelSpec& spec,
                           const std::vector<typename B::Tensor>& params,
                           const typename B::Tensor& x, size_t batch,
                           Activations<B>* acts = nullptr) {
  using T = typename B::Tensor;
  MPC3_ENFORCE(params.size() == spec.param_shapes().size(), ShapeError,
               "forward: parameter count does not match the model");
  T cur = be.reshape(x, batched(batch, spec.input));
  if (acts) {
    acts->batch = batch;
    acts->inputs.assign(spec.layers.size(), T{});
    acts->masks.assign(spec.layers.size(), T{});
  }
  size_t pi = 0;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (acts) acts->inputs[i] = cur;
    switch (l.kind) {
      case LayerKind::kConv2d:
        cur = be.conv2d(cur, params[pi], params[pi + 1], l.geometry(batch));
        pi += 2;
        break;
      case LayerKind::kFullyConnected:
        cur = be.fc(cur, params[pi], params[pi + 1]);
        pi += 2;
        break;
      case LayerKind::kAvgPool:
        cur = be.avgpool(cur, l.geometry(batch));
        break;
      case LayerKind::kReLU: {
        auto [y, m] = be.relu(cur);
        cur = std::move(y);
        if (acts) acts->masks[i] = std::move(m);
        break;
      }
      case LayerKind::kFlatten:
        cur = be.reshape(cur, batched(batch, l.out_shape));
        break;
    }
  }
  if (acts) acts->output = cur;
  return cur;
}

// Parameter gradients (summed over the batch) for the loss gradient `gout`
// at the logits. No input gradient is formed below the first parameterised
// layer.
template <class B>
std::vector<typename B::Tensor> backward(
    B& be, const ModelSpec& spec, const std::vector<typename B::Tensor>& params,
    const Activations<B>& acts, const typename B::Tensor& gout) {
  using T = typename B::Tensor;
  MPC3_ENFORCE(acts.inputs.size() == spec.layers.size(), ConfigError,
               "backward: missing activation cache");
  const size_t batch = acts.batch;
  const size_t first = spec.first_param_layer();
  std::vector<T> grads(params.size());
  size_t pi = params.size();
  T g = gout;
  for (size_t ii = spec.layers.size(); ii-- > 0;) {
    const LayerSpec& l = spec.layers[ii];
    if (ii < first) break;
    const bool need_dx = ii > first;
    switch (l.kind) {
      case LayerKind::kConv2d: {
        pi -= 2;
        auto r = be.conv2d_backward(acts.inputs[ii], params[pi], g,
                                    l.geometry(batch), need_dx);
        grads[pi] = std::move(r.dw);
        grads[pi + 1] = std::move(r.db);
        g = std::move(r.dx);
        break;
      }
      case LayerKind::kFullyConnected: {
        pi -= 2;
        auto r = be.fc_backward(acts.inputs[ii], params[pi], g, need_dx);
        grads[pi] = std::move(r.dw);
        grads[pi + 1] = std::move(r.db);
        g = std::move(r.dx);
        break;
      }
      case LayerKind::kAvgPool:
        g = be.avgpool_backward(g, l.geometry(batch));
        break;
      case LayerKind::kReLU:
        g = be.relu_backward(g, acts.masks[ii]);
        break;
      case LayerKind::kFlatten:
        g = be.reshape(g, batched(batch, l.in_shape));
        break;
    }
  }
  return grads;
}

template <class B>
void sgd_step(B& be, std::vector<typename B::Tensor>& params,
              const std::vector<typename B::Tensor>& grads, double lr,
              size_t batch) {
  MPC3_ENFORCE(params.size() == grads.size(), ShapeError,
               "sgd: parameter and gradient lists differ");
  for (size_t i = 0; i < params.size(); ++i)
    params[i] = be.sgd(params[i], grads[i], lr, batch);
}

// One SGD iteration; returns the logits of the batch before the update.
template <class B>
typename B::Tensor train_step(B& be, const ModelSpec& spec,
                              std::vector<typename B::Tensor>& params,
                              const typename B::Tensor& x,
                              const typename B::Tensor& onehot, size_t batch,
                              double lr) {
  Activations<B> acts;
  auto logits = forward(be, spec, params, x, batch, &acts);
  auto gout = be.loss_grad(logits, onehot);
  auto grads = backward(be, spec, params, acts, gout);
  sgd_step(be, params, grads, lr, batch);
  return logits;
}

}  // namespace mpc3::nn
