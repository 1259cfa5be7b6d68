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

#include "mpc3/sharing.h"

#include "mpc3/errors.h"

namespace mpc3 {

RingTensor random_tensor(const Shape& shape, Rng& rng) {
  RingTensor r(shape);
  for (auto& v : r.data) v = rng();
  return r;
}

std::array<ArithmeticShare, 3> share(const RingTensor& x, Rng& rng,
                                     const FixedPointConfig& cfg) {
  std::array<RingTensor, 3> xs;
  xs[0] = random_tensor(x.shape, rng);
  xs[1] = random_tensor(x.shape, rng);
  xs[2] = ring_sub(ring_sub(x, xs[0]), xs[1]);
  std::array<ArithmeticShare, 3> out;
  for (PartyId p : kParties)
    out[p.idx()] = {p, xs[p.idx()], xs[p.next().idx()], cfg};
  return out;
}

namespace {

// Collects the three slots from the given shares, checking overlaps.
template <class S>
std::array<const RingTensor*, 3> gather_slots(std::span<const S> shares) {
  std::array<const RingTensor*, 3> slot{};
  std::array<bool, 3> seen{};
  int distinct = 0;
  for (const auto& s : shares) {
    MPC3_ENFORCE(s.owner.valid(), ThresholdError, "share with bad owner");
    if (!seen[s.owner.idx()]) ++distinct;
    seen[s.owner.idx()] = true;
    const std::array<std::pair<int, const RingTensor*>, 2> parts = {
        std::pair{s.owner.idx(), &s.lo},
        std::pair{s.owner.next().idx(), &s.hi}};
    for (auto [k, t] : parts) {
      if (slot[k] == nullptr) {
        slot[k] = t;
      } else if (!(*slot[k] == *t)) {
        throw IntegrityError("replicated component x_" +
                             std::to_string(k + 1) +
                             " differs between parties");
      }
    }
  }
  MPC3_ENFORCE(distinct >= 2, ThresholdError,
               "reconstruction needs shares from two distinct parties");
  return slot;
}

}  // namespace

RingTensor reconstruct(std::span<const ArithmeticShare> shares) {
  auto s = gather_slots(shares);
  return ring_add(ring_add(*s[0], *s[1]), *s[2]);
}

std::array<BinaryShare, 3> xor_share(const RingTensor& x, Rng& rng) {
  std::array<RingTensor, 3> xs;
  xs[0] = random_tensor(x.shape, rng);
  xs[1] = random_tensor(x.shape, rng);
  xs[2] = ring_xor(ring_xor(x, xs[0]), xs[1]);
  std::array<BinaryShare, 3> out;
  for (PartyId p : kParties)
    out[p.idx()] = {p, xs[p.idx()], xs[p.next().idx()]};
  return out;
}

RingTensor xor_reconstruct(std::span<const BinaryShare> shares) {
  auto s = gather_slots(shares);
  return ring_xor(ring_xor(*s[0], *s[1]), *s[2]);
}

ArithmeticShare arith_embed(PartyId self, PartyId slot, const RingTensor& v,
                            const FixedPointConfig& cfg) {
  ArithmeticShare a{self, RingTensor(v.shape), RingTensor(v.shape), cfg};
  if (self == slot) a.lo = v;
  if (self.next() == slot) a.hi = v;
  return a;
}

BinaryShare binary_embed(PartyId self, PartyId slot, const RingTensor& v) {
  BinaryShare b{self, RingTensor(v.shape), RingTensor(v.shape)};
  if (self == slot) b.lo = v;
  if (self.next() == slot) b.hi = v;
  return b;
}

ArithmeticShare add(const ArithmeticShare& a, const ArithmeticShare& b) {
  return {a.owner, ring_add(a.lo, b.lo), ring_add(a.hi, b.hi), a.cfg};
}

ArithmeticShare sub(const ArithmeticShare& a, const ArithmeticShare& b) {
  return {a.owner, ring_sub(a.lo, b.lo), ring_sub(a.hi, b.hi), a.cfg};
}

ArithmeticShare neg(const ArithmeticShare& a) {
  return {a.owner, ring_neg(a.lo), ring_neg(a.hi), a.cfg};
}

ArithmeticShare scale(const ArithmeticShare& a, uint64_t c) {
  return {a.owner, ring_scalar_mul(a.lo, c), ring_scalar_mul(a.hi, c), a.cfg};
}

ArithmeticShare add_public(const ArithmeticShare& a, const RingTensor& c) {
  return add(a, arith_embed(a.owner, PartyId{1}, c, a.cfg));
}

ArithmeticShare add_public(const ArithmeticShare& a, uint64_t c) {
  ArithmeticShare r = a;
  if (a.owner == PartyId{1})
    for (auto& v : r.lo.data) v += c;
  if (a.owner.next() == PartyId{1})
    for (auto& v : r.hi.data) v += c;
  return r;
}

BinaryShare xor_shares(const BinaryShare& a, const BinaryShare& b) {
  return {a.owner, ring_xor(a.lo, b.lo), ring_xor(a.hi, b.hi)};
}

BinaryShare shl(const BinaryShare& a, int bits) {
  return {a.owner, ring_shl(a.lo, bits), ring_shl(a.hi, bits)};
}

}  // namespace mpc3
