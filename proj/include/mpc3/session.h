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

#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <type_traits>

#include "mpc3/context.h"
#include "mpc3/errors.h"

namespace mpc3 {

// Key material for one party. With a seed, keys and the session id are
// derived deterministically so runs can be repeated and compared.
struct SessionParams {
  std::optional<uint64_t> seed;
  SessionId session{};
  FixedPointConfig fx;
};

SessionId derive_session_id(uint64_t seed);
Key128 derive_party_key(uint64_t seed, PartyId p);
Key128 random_key();
SessionParams make_session(std::optional<uint64_t> seed, FixedPointConfig fx);

// Exchanges keys over the endpoint and returns a ready context.
PartyContext open_context(Endpoint& ep, const SessionParams& sp);

// Runs fn(ctx) for the three parties on threads joined by an in-process
// network. Rethrows the first failure after unblocking the other parties.
template <class F>
auto simulate(const SessionParams& sp, F&& fn) {
  using R = std::invoke_result_t<F&, PartyContext&>;
  using Slot = std::conditional_t<std::is_void_v<R>, bool, std::optional<R>>;
  InProcessNetwork net;
  std::array<Slot, 3> results{};
  std::array<std::exception_ptr, 3> errors{};
  std::array<std::thread, 3> threads;
  for (PartyId p : kParties) {
    threads[p.idx()] = std::thread([&, p] {
      try {
        PartyContext ctx = open_context(net.endpoint(p), sp);
        if constexpr (std::is_void_v<R>) {
          fn(ctx);
          results[p.idx()] = true;
        } else {
          results[p.idx()].emplace(fn(ctx));
        }
      } catch (...) {
        errors[p.idx()] = std::current_exception();
        net.shutdown();
      }
    });
  }
  for (auto& t : threads) t.join();
  // Prefer the root cause over the TransportErrors it triggered elsewhere.
  std::exception_ptr first;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const TransportError&) {
      if (!first) first = e;
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (first) std::rethrow_exception(first);
  if constexpr (std::is_void_v<R>) {
    return;
  } else {
    std::array<R, 3> out;
    for (int i = 0; i < 3; ++i) out[i] = std::move(*results[i]);
    return out;
  }
}

}  // namespace mpc3
