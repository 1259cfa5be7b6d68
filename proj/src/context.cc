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

#include "mpc3/context.h"

#include <algorithm>
#include <cstring>

#include "mpc3/errors.h"

namespace mpc3 {

PartyContext::PartyContext(Endpoint& ep, FixedPointConfig cfg)
    : ep_(ep), cfg_(cfg) {
  cfg_.validate();
}

void PartyContext::set_fx(const FixedPointConfig& cfg) {
  cfg.validate();
  cfg_ = cfg;
}

void PartyContext::setup_keys(const Key128& own, const SessionId& session) {
  RingTensor k({2});
  std::memcpy(k.data.data(), own.data(), 16);
  send(id().next(), k);
  RingTensor pk = recv(id().prev(), {2});
  Key128 pred{};
  std::memcpy(pred.data(), pk.data.data(), 16);
  round("keys");
  keys_.emplace(own, pred, session);
}

void PartyContext::install_keys(const Key128& own, const Key128& pred,
                                const SessionId& session) {
  keys_.emplace(own, pred, session);
}

PrfKeySet& PartyContext::keys() {
  MPC3_ENFORCE(keys_.has_value(), ConfigError, "PRF keys not set up");
  return *keys_;
}

uint64_t PartyContext::next_zero_counter(Purpose p) {
  const auto tag = static_cast<uint16_t>(p);
  return std::max(keys().next_counter(KeyRole::kOwn, tag),
                  keys().next_counter(KeyRole::kPred, tag));
}

RingTensor PartyContext::zero_share(Purpose p, uint64_t j, const Shape& shape) {
  const auto tag = static_cast<uint16_t>(p);
  const size_t n = numel(shape);
  auto a = keys().draw(KeyRole::kOwn, tag, j, n);
  auto b = keys().draw(KeyRole::kPred, tag, j, n);
  for (size_t i = 0; i < n; ++i) a[i] -= b[i];
  return RingTensor(shape, std::move(a));
}

RingTensor PartyContext::zero_share(Purpose p, const Shape& shape) {
  return zero_share(p, next_zero_counter(p), shape);
}

RingTensor PartyContext::xor_zero_share(Purpose p, const Shape& shape) {
  const auto tag = static_cast<uint16_t>(p);
  const uint64_t j = next_zero_counter(p);
  const size_t n = numel(shape);
  auto a = keys().draw(KeyRole::kOwn, tag, j, n);
  auto b = keys().draw(KeyRole::kPred, tag, j, n);
  for (size_t i = 0; i < n; ++i) a[i] ^= b[i];
  return RingTensor(shape, std::move(a));
}

KeyRole PartyContext::role_for(PartyId peer) const {
  if (peer == id().next()) return KeyRole::kOwn;
  if (peer == id().prev()) return KeyRole::kPred;
  throw TopologyError("party " + std::to_string(id().id) +
                      " shares no key with party " + std::to_string(peer.id));
}

RingTensor PartyContext::pairwise_random(PartyId peer, Purpose p, uint64_t j,
                                         const Shape& shape) {
  return RingTensor(shape, keys().draw(role_for(peer), static_cast<uint16_t>(p),
                                       j, numel(shape)));
}

RingTensor PartyContext::pairwise_random(PartyId peer, Purpose p,
                                         const Shape& shape) {
  const KeyRole r = role_for(peer);
  const auto tag = static_cast<uint16_t>(p);
  return RingTensor(shape,
                    keys().draw(r, tag, keys().next_counter(r, tag), numel(shape)));
}

}  // namespace mpc3
