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

#include "mpc3/session.h"

#include <openssl/rand.h>
#include <openssl/sha.h>

#include <cstring>

#include "mpc3/errors.h"

namespace mpc3 {

namespace {

std::array<uint8_t, 32> sha256_of(const std::string& label, uint64_t seed,
                                  int party) {
  std::string msg = label;
  msg.append(reinterpret_cast<const char*>(&seed), sizeof(seed));
  msg.push_back(static_cast<char>(party));
  std::array<uint8_t, 32> h{};
  SHA256(reinterpret_cast<const unsigned char*>(msg.data()), msg.size(),
         h.data());
  return h;
}

}  // namespace

SessionId derive_session_id(uint64_t seed) {
  auto h = sha256_of("mpc3/session", seed, 0);
  SessionId s{};
  std::memcpy(s.data(), h.data(), s.size());
  return s;
}

Key128 derive_party_key(uint64_t seed, PartyId p) {
  auto h = sha256_of("mpc3/key", seed, p.id);
  Key128 k{};
  std::memcpy(k.data(), h.data(), k.size());
  return k;
}

Key128 random_key() {
  Key128 k{};
  if (RAND_bytes(k.data(), static_cast<int>(k.size())) != 1)
    throw Error("RAND_bytes failed");
  return k;
}

SessionParams make_session(std::optional<uint64_t> seed, FixedPointConfig fx) {
  SessionParams sp;
  sp.seed = seed;
  sp.fx = fx;
  if (seed) sp.session = derive_session_id(*seed);
  return sp;
}

PartyContext open_context(Endpoint& ep, const SessionParams& sp) {
  PartyContext ctx(ep, sp.fx);
  const Key128 own = sp.seed ? derive_party_key(*sp.seed, ep.self()) : random_key();
  ctx.setup_keys(own, sp.session);
  return ctx;
}

}  // namespace mpc3
