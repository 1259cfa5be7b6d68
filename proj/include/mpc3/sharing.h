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

#include <array>
#include <random>
#include <span>

#include "mpc3/ring.h"
#include "mpc3/transport.h"

namespace mpc3 {

// Replicated share held by party i: lo = x_i, hi = x_{i+1}.
struct ArithmeticShare {
  PartyId owner;
  RingTensor lo;
  RingTensor hi;
  FixedPointConfig cfg;

  const Shape& shape() const { return lo.shape; }
  size_t size() const { return lo.size(); }
  ArithmeticShare reshaped(const Shape& s) const {
    return {owner, lo.reshaped(s), hi.reshaped(s), cfg};
  }
};

struct AdditiveShare {
  PartyId owner;
  RingTensor val;
};

// Replicated XOR sharing of 64-bit words.
struct BinaryShare {
  PartyId owner;
  RingTensor lo;
  RingTensor hi;

  const Shape& shape() const { return lo.shape; }
  size_t size() const { return lo.size(); }
};

using Rng = std::mt19937_64;

RingTensor random_tensor(const Shape& shape, Rng& rng);

// Dealer-side sharing: x_1, x_2 uniform, x_3 = x - x_1 - x_2.
std::array<ArithmeticShare, 3> share(const RingTensor& x, Rng& rng,
                                     const FixedPointConfig& cfg = {});
// Needs shares from at least two distinct parties. Throws ThresholdError or
// IntegrityError.
RingTensor reconstruct(std::span<const ArithmeticShare> shares);

std::array<BinaryShare, 3> xor_share(const RingTensor& x, Rng& rng);
RingTensor xor_reconstruct(std::span<const BinaryShare> shares);

// Sharing in which slot `slot` holds v and the other two slots hold zero.
// Every party can build its own share locally when it knows v.
ArithmeticShare arith_embed(PartyId self, PartyId slot, const RingTensor& v,
                            const FixedPointConfig& cfg = {});
BinaryShare binary_embed(PartyId self, PartyId slot, const RingTensor& v);

// Local operations.
ArithmeticShare add(const ArithmeticShare& a, const ArithmeticShare& b);
ArithmeticShare sub(const ArithmeticShare& a, const ArithmeticShare& b);
ArithmeticShare neg(const ArithmeticShare& a);
ArithmeticShare scale(const ArithmeticShare& a, uint64_t c);
ArithmeticShare add_public(const ArithmeticShare& a, const RingTensor& c);
ArithmeticShare add_public(const ArithmeticShare& a, uint64_t c);
BinaryShare xor_shares(const BinaryShare& a, const BinaryShare& b);
BinaryShare shl(const BinaryShare& a, int bits);

// Applies a linear map on ring tensors to both components.
template <class F>
ArithmeticShare map_linear(const ArithmeticShare& a, F&& f) {
  return {a.owner, f(a.lo), f(a.hi), a.cfg};
}

}  // namespace mpc3
