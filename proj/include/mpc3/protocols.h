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

#include <optional>

#include "mpc3/bilinear.h"
#include "mpc3/context.h"

namespace mpc3 {

struct ExpConfig {
  int m = 512;
  int squarings() const;
};

struct ReciprocalConfig {
  double Y = 200.0;
  int iterations = 13;
};

// Input sharing by an owner. Slots x_o and x_{o+1} come from PRF streams the
// owner shares with its neighbours; x_{o+2} = x - x_o - x_{o+1} is sent to
// both. One round. Non-owners pass value == nullptr.
ArithmeticShare input(PartyContext& ctx, PartyId owner,
                      const RingTensor* value, const Shape& shape);

// Reveals x to all three parties (one round).
RingTensor open(PartyContext& ctx, const ArithmeticShare& x);
// Reveals x to `to` only; other parties get nullopt.
std::optional<RingTensor> open_to(PartyContext& ctx, const ArithmeticShare& x,
                                  PartyId to);
RingTensor open_binary(PartyContext& ctx, const BinaryShare& x);

// 3-of-3 to 2-of-3: adds a zero share and sends the result to the
// predecessor, which needs it as its hi component.
ArithmeticShare reshare(PartyContext& ctx, const RingTensor& z, Purpose p);

// Untruncated ring product.
ArithmeticShare mul(PartyContext& ctx, const ArithmeticShare& x,
                    const ArithmeticShare& y);
// Divides by 2^bits with stochastic rounding: error in (-1, 1] unit.
// Requires |x| < 2^62.
ArithmeticShare truncate(PartyContext& ctx, const ArithmeticShare& x,
                         int bits);
// mul followed by truncate(t).
ArithmeticShare mul_fx(PartyContext& ctx, const ArithmeticShare& x,
                       const ArithmeticShare& y);
// Fixed-point multiply by a public real constant.
ArithmeticShare mul_public_fx(PartyContext& ctx, const ArithmeticShare& x,
                              double c);

// Bilinear op on shares without truncation.
ArithmeticShare bilinear_raw(PartyContext& ctx, const ArithmeticShare& a,
                             const ArithmeticShare& b,
                             const BilinearOpSpec& spec);
ArithmeticShare matmul_shares(PartyContext& ctx, const ArithmeticShare& a,
                              const ArithmeticShare& b,
                              const BilinearOpSpec& spec);
ArithmeticShare conv2d_shares(PartyContext& ctx, const ArithmeticShare& x,
                              const ArithmeticShare& w,
                              const BilinearOpSpec& spec);
// Public multiplier and shift that divide a window sum by its area. Power of
// two areas shift only; other areas use a constant with 10 extra bits, which
// needs |sum| < area * 2^(52 - 2t) in real units.
struct PoolScale {
  uint64_t factor;
  int shift;
};
PoolScale avgpool_scale(size_t area, const FixedPointConfig& fx);

// g describes the window: kh, kw, stride, pad; out_c must equal in_c.
ArithmeticShare avgpool_shares(PartyContext& ctx, const ArithmeticShare& x,
                               const Conv2dGeometry& g);
// Local window sums of both components.
ArithmeticShare sum_pool_local(const ArithmeticShare& x,
                               const Conv2dGeometry& g);

BinaryShare and_shares(PartyContext& ctx, const BinaryShare& a,
                       const BinaryShare& b);
BinaryShare a2b(PartyContext& ctx, const ArithmeticShare& x);
// Bit 63 of x, as a 0/1 word per element.
BinaryShare msb(PartyContext& ctx, const ArithmeticShare& x);
// Arithmetic sharing of the same unscaled 0/1 value. Throws DomainError on
// words other than 0 and 1.
ArithmeticShare bit_inject(PartyContext& ctx, const BinaryShare& b);

ArithmeticShare relu(PartyContext& ctx, const ArithmeticShare& x);
// relu together with its unscaled drelu mask.
std::pair<ArithmeticShare, ArithmeticShare> relu_with_mask(
    PartyContext& ctx, const ArithmeticShare& x);
ArithmeticShare drelu(PartyContext& ctx, const ArithmeticShare& x);
ArithmeticShare compare(PartyContext& ctx, const ArithmeticShare& x,
                        const ArithmeticShare& y);
// Row-wise maximum of a [rows, m] tensor; result [rows, 1].
ArithmeticShare max_tree(PartyContext& ctx, const ArithmeticShare& v);

// (1 + x/m)^m. Accurate for x in [-1.5 m, 0] when t + log2(m) <= 31; larger
// t trades away part of the extra precision.
ArithmeticShare exp_approx(PartyContext& ctx, const ArithmeticShare& x,
                           const ExpConfig& cfg = {});
// Newton iteration z <- 2z - y z^2 from z0 = 1/Y; y must lie in [1, Y].
ArithmeticShare reciprocal(PartyContext& ctx, const ArithmeticShare& y,
                           const ReciprocalConfig& cfg = {});
ArithmeticShare division(PartyContext& ctx, const ArithmeticShare& x,
                         const ArithmeticShare& y,
                         const ReciprocalConfig& cfg = {});
// Row-wise softmax of [rows, d]. Throws ConfigError if d > Y.
ArithmeticShare softmax(PartyContext& ctx, const ArithmeticShare& z,
                        const ExpConfig& ecfg = {},
                        const ReciprocalConfig& rcfg = {});

}  // namespace mpc3
