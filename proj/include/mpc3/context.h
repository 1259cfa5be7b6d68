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

#include "mpc3/prf.h"
#include "mpc3/sharing.h"
#include "mpc3/transport.h"

namespace mpc3 {

// One PRF stream family per protocol step.
enum class Purpose : uint16_t {
  kInput = 1,
  kMulReshare = 2,
  kTruncOt = 3,
  kTruncReshare = 4,
  kA2bMask = 5,
  kAndReshare = 6,
  kOpen = 7,
  kTest = 0x7fff,
};

class PartyContext {
 public:
  PartyContext(Endpoint& ep, FixedPointConfig cfg = {});

  PartyId id() const { return ep_.self(); }
  const FixedPointConfig& fx() const { return cfg_; }
  void set_fx(const FixedPointConfig& cfg);
  Endpoint& net() { return ep_; }
  const CommStats& stats() const { return ep_.stats(); }

  // Sends k_i to the successor and receives k_{i-1} from the predecessor.
  void setup_keys(const Key128& own, const SessionId& session);
  // Test hook: installs both keys without communication.
  void install_keys(const Key128& own, const Key128& pred,
                    const SessionId& session);
  bool has_keys() const { return keys_.has_value(); }
  PrfKeySet& keys();

  // z_i = F(k_i, j) - F(k_{i-1}, j); the three sum to zero.
  RingTensor zero_share(Purpose p, uint64_t j, const Shape& shape);
  RingTensor zero_share(Purpose p, const Shape& shape);
  // XOR analog: F(k_i, j) ^ F(k_{i-1}, j).
  RingTensor xor_zero_share(Purpose p, const Shape& shape);

  // Stream shared with a cyclic neighbour: k_i for the successor, k_{i-1} for
  // the predecessor. Throws TopologyError otherwise.
  RingTensor pairwise_random(PartyId peer, Purpose p, uint64_t j,
                             const Shape& shape);
  RingTensor pairwise_random(PartyId peer, Purpose p, const Shape& shape);

  void send(PartyId to, const RingTensor& t) { ep_.send(to, t); }
  RingTensor recv(PartyId from, const Shape& shape) {
    return ep_.recv(from, shape);
  }
  void round(std::string_view label) { ep_.round_mark(label); }

 private:
  KeyRole role_for(PartyId peer) const;
  uint64_t next_zero_counter(Purpose p);

  Endpoint& ep_;
  FixedPointConfig cfg_;
  std::optional<PrfKeySet> keys_;
};

}  // namespace mpc3
