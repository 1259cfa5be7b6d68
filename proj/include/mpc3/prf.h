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
#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "mpc3/transport.h"

namespace mpc3 {

using Key128 = std::array<uint8_t, 16>;

inline constexpr uint64_t kMaxCounter = (uint64_t{1} << 48) - 1;

// AES-128 in counter form. Block b of stream (purpose, j) is
// AES_k(le64(purpose << 48 | j) || le64(b)) and yields two output words.
class Prf {
 public:
  explicit Prf(const Key128& key);
  ~Prf();
  Prf(Prf&&) noexcept;
  Prf& operator=(Prf&&) noexcept;

  void eval(uint16_t purpose, uint64_t counter, uint64_t* out, size_t n);
  std::vector<uint64_t> eval(uint16_t purpose, uint64_t counter, size_t n);

  // AES_key(session): ties a sampled key to one session.
  static Key128 bind(const Key128& key, const SessionId& session);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class KeyRole { kOwn, kPred };

// k_i (own) and k_{i-1} (pred) with a per-(key, purpose) high-water mark.
class PrfKeySet {
 public:
  PrfKeySet(const Key128& own, const Key128& pred, const SessionId& session);

  // Draws n words of stream (purpose, j). Throws FreshnessError if j is at or
  // below a counter already used for this key and purpose.
  std::vector<uint64_t> draw(KeyRole role, uint16_t purpose, uint64_t j,
                             size_t n);
  uint64_t next_counter(KeyRole role, uint16_t purpose) const;

 private:
  Prf own_;
  Prf pred_;
  std::map<std::pair<int, uint16_t>, uint64_t> next_;
};

}  // namespace mpc3
