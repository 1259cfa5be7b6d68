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

#include <utility>
#include <vector>

#include "mpc3/bilinear.h"
#include "mpc3/context.h"
#include "mpc3/protocols.h"
#include "mpc3/ring.h"

namespace mpc3::nn {

struct FloatTensor {
  Shape shape;
  std::vector<double> data;

  FloatTensor() = default;
  explicit FloatTensor(Shape s) : shape(std::move(s)), data(numel(shape), 0.0) {}
  FloatTensor(Shape s, std::vector<double> d);
  size_t size() const { return data.size(); }
};

template <class T>
struct ParamGrads {
  T dw;
  T db;
  T dx;  // empty when not requested
};

// Every backend provides the same layer primitives; the layer composition in
// network.h is shared. Weights are [out, in] for fc and OIHW for conv.
// Gradients of weights are sums over the batch; sgd divides by the batch.

class FloatBackend {
 public:
  using Tensor = FloatTensor;

  Tensor reshape(const Tensor& x, Shape s) const;
  Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                const Conv2dGeometry& g);
  Tensor fc(const Tensor& x, const Tensor& w, const Tensor& b);
  std::pair<Tensor, Tensor> relu(const Tensor& x);
  Tensor avgpool(const Tensor& x, const Conv2dGeometry& g);

  ParamGrads<Tensor> conv2d_backward(const Tensor& x, const Tensor& w,
                                     const Tensor& gy, const Conv2dGeometry& g,
                                     bool need_dx);
  ParamGrads<Tensor> fc_backward(const Tensor& x, const Tensor& w,
                                 const Tensor& gy, bool need_dx);
  Tensor relu_backward(const Tensor& gy, const Tensor& mask);
  Tensor avgpool_backward(const Tensor& gy, const Conv2dGeometry& g);
  Tensor loss_grad(const Tensor& logits, const Tensor& onehot);
  Tensor sgd(const Tensor& w, const Tensor& dw, double lr, size_t batch);
};

// Plaintext fixed point over Z_2^64. Mirrors the private pipeline step by
// step; truncation rounds to nearest instead of stochastically.
class FixedBackend {
 public:
  using Tensor = RingTensor;

  explicit FixedBackend(FixedPointConfig fx, ExpConfig ecfg = {},
                        ReciprocalConfig rcfg = {});

  const FixedPointConfig& fx() const { return fx_; }
  Tensor trunc(const Tensor& x, int bits) const;
  Tensor mul_fx(const Tensor& a, const Tensor& b) const;
  Tensor exp_approx(const Tensor& x) const;
  Tensor reciprocal(const Tensor& y) const;
  Tensor softmax(const Tensor& z) const;
  Tensor row_max(const Tensor& z) const;

  Tensor reshape(const Tensor& x, Shape s) const;
  Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                const Conv2dGeometry& g);
  Tensor fc(const Tensor& x, const Tensor& w, const Tensor& b);
  std::pair<Tensor, Tensor> relu(const Tensor& x);
  Tensor avgpool(const Tensor& x, const Conv2dGeometry& g);

  ParamGrads<Tensor> conv2d_backward(const Tensor& x, const Tensor& w,
                                     const Tensor& gy, const Conv2dGeometry& g,
                                     bool need_dx);
  ParamGrads<Tensor> fc_backward(const Tensor& x, const Tensor& w,
                                 const Tensor& gy, bool need_dx);
  Tensor relu_backward(const Tensor& gy, const Tensor& mask);
  Tensor avgpool_backward(const Tensor& gy, const Conv2dGeometry& g);
  Tensor loss_grad(const Tensor& logits, const Tensor& onehot);
  Tensor sgd(const Tensor& w, const Tensor& dw, double lr, size_t batch);

 private:
  FixedPointConfig fx_;
  ExpConfig ecfg_;
  ReciprocalConfig rcfg_;
};

class PrivateBackend {
 public:
  using Tensor = ArithmeticShare;

  explicit PrivateBackend(PartyContext& ctx, ExpConfig ecfg = {},
                          ReciprocalConfig rcfg = {})
      : ctx_(ctx), ecfg_(ecfg), rcfg_(rcfg) {}

  PartyContext& ctx() { return ctx_; }

  Tensor reshape(const Tensor& x, Shape s) const;
  Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                const Conv2dGeometry& g);
  Tensor fc(const Tensor& x, const Tensor& w, const Tensor& b);
  std::pair<Tensor, Tensor> relu(const Tensor& x);
  Tensor avgpool(const Tensor& x, const Conv2dGeometry& g);

  ParamGrads<Tensor> conv2d_backward(const Tensor& x, const Tensor& w,
                                     const Tensor& gy, const Conv2dGeometry& g,
                                     bool need_dx);
  ParamGrads<Tensor> fc_backward(const Tensor& x, const Tensor& w,
                                 const Tensor& gy, bool need_dx);
  Tensor relu_backward(const Tensor& gy, const Tensor& mask);
  Tensor avgpool_backward(const Tensor& gy, const Conv2dGeometry& g);
  Tensor loss_grad(const Tensor& logits, const Tensor& onehot);
  Tensor sgd(const Tensor& w, const Tensor& dw, double lr, size_t batch);

 private:
  PartyContext& ctx_;
  ExpConfig ecfg_;
  ReciprocalConfig rcfg_;
};

// Public constant and shift used to apply lr / batch in one truncation.
struct SgdScale {
  uint64_t factor;
  int shift;
};
SgdScale sgd_scale(double lr, size_t batch, const FixedPointConfig& fx);

}  // namespace mpc3::nn
