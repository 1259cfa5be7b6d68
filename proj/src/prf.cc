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

#include "mpc3/prf.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>

#include "mpc3/errors.h"

namespace mpc3 {

namespace {

constexpr size_t kChunkBlocks = 4096;

EVP_CIPHER_CTX* new_ecb(const Key128& key) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx || EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(),
                                 nullptr) != 1)
    throw Error("EVP AES-128 init failed");
  EVP_CIPHER_CTX_set_padding(ctx, 0);
  return ctx;
}

}  // namespace

struct Prf::Impl {
  EVP_CIPHER_CTX* ctx = nullptr;
  std::vector<uint64_t> in, out;
  ~Impl() { EVP_CIPHER_CTX_free(ctx); }
};

Prf::Prf(const Key128& key) : impl_(std::make_unique<Impl>()) {
  impl_->ctx = new_ecb(key);
}

Prf::~Prf() = default;
Prf::Prf(Prf&&) noexcept = default;
Prf& Prf::operator=(Prf&&) noexcept = default;

void Prf::eval(uint16_t purpose, uint64_t counter, uint64_t* out, size_t n) {
  if (counter > kMaxCounter) throw RangeError("PRF counter exceeds 48 bits");
  const uint64_t head = (uint64_t{purpose} << 48) | counter;
  const size_t blocks = (n + 1) / 2;
  auto& in = impl_->in;
  auto& buf = impl_->out;
  for (size_t b0 = 0; b0 < blocks; b0 += kChunkBlocks) {
    const size_t nb = std::min(kChunkBlocks, blocks - b0);
    in.resize(2 * nb);
    buf.resize(2 * nb);
    for (size_t b = 0; b < nb; ++b) {
      in[2 * b] = head;
      in[2 * b + 1] = b0 + b;
    }
    int len = 0;
    if (EVP_EncryptUpdate(impl_->ctx,
                          reinterpret_cast<unsigned char*>(buf.data()), &len,
                          reinterpret_cast<const unsigned char*>(in.data()),
                          static_cast<int>(16 * nb)) != 1 ||
        len != static_cast<int>(16 * nb))
      throw Error("EVP AES-128 encrypt failed");
    const size_t first = 2 * b0;
    const size_t take = std::min(2 * nb, n - first);
    std::memcpy(out + first, buf.data(), take * sizeof(uint64_t));
  }
}

std::vector<uint64_t> Prf::eval(uint16_t purpose, uint64_t counter, size_t n) {
  std::vector<uint64_t> v(n);
  eval(purpose, counter, v.data(), n);
  return v;
}

Key128 Prf::bind(const Key128& key, const SessionId& session) {
  EVP_CIPHER_CTX* ctx = new_ecb(key);
  Key128 out{};
  int len = 0;
  const int ok = EVP_EncryptUpdate(ctx, out.data(), &len, session.data(), 16);
  EVP_CIPHER_CTX_free(ctx);
  if (ok != 1 || len != 16) throw Error("EVP AES-128 encrypt failed");
  return out;
}

PrfKeySet::PrfKeySet(const Key128& own, const Key128& pred,
                     const SessionId& session)
    : own_(Prf::bind(own, session)), pred_(Prf::bind(pred, session)) {}

std::vector<uint64_t> PrfKeySet::draw(KeyRole role, uint16_t purpose,
                                      uint64_t j, size_t n) {
  auto& hw = next_[{static_cast<int>(role), purpose}];
  if (j < hw)
    throw FreshnessError("PRF counter " + std::to_string(j) +
                         " reused for purpose " + std::to_string(purpose));
  hw = j + 1;
  return (role == KeyRole::kOwn ? own_ : pred_).eval(purpose, j, n);
}

uint64_t PrfKeySet::next_counter(KeyRole role, uint16_t purpose) const {
  auto it = next_.find({static_cast<int>(role), purpose});
  return it == next_.end() ? 0 : it->second;
}

}  // namespace mpc3
