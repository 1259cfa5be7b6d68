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

#include "mpc3/transport.h"

#include <charconv>

#include "mpc3/errors.h"

namespace mpc3 {

namespace {

constexpr uint64_t kDigestPrime = 0x100000001b3ULL;
constexpr uint64_t kDigestSeed = 0xcbf29ce484222325ULL;

uint64_t mix(uint64_t h, std::span<const uint64_t> words) {
  if (h == 0) h = kDigestSeed;
  h = (h ^ words.size()) * kDigestPrime;
  for (uint64_t w : words) h = (h ^ w) * kDigestPrime;
  return h;
}

}  // namespace

uint64_t CommStats::total_sent() const {
  return bytes_sent[0] + bytes_sent[1] + bytes_sent[2];
}

uint64_t CommStats::total_received() const {
  return bytes_received[0] + bytes_received[1] + bytes_received[2];
}

CommStats CommStats::minus(const CommStats& e) const {
  CommStats d = *this;
  for (int i = 0; i < 3; ++i) {
    d.bytes_sent[i] -= e.bytes_sent[i];
    d.bytes_received[i] -= e.bytes_received[i];
  }
  d.messages_sent -= e.messages_sent;
  d.messages_received -= e.messages_received;
  d.rounds -= e.rounds;
  for (const auto& [k, v] : e.rounds_by_label) d.rounds_by_label[k] -= v;
  std::erase_if(d.rounds_by_label, [](const auto& kv) { return kv.second == 0; });
  return d;
}

void Endpoint::check_peer(PartyId p) const {
  MPC3_ENFORCE(p.valid() && p != self_, TopologyError,
               "party " + std::to_string(self_.id) + " has no channel to " +
                   std::to_string(p.id));
}

void Endpoint::send(PartyId to, std::span<const uint64_t> payload) {
  check_peer(to);
  const uint64_t bytes = 8 * static_cast<uint64_t>(payload.size());
  if (bytes > kMaxFrameBytes)
    throw FrameError("frame of " + std::to_string(bytes) +
                     " bytes exceeds 2^32");
  stats_.bytes_sent[to.idx()] += kFrameHeaderBytes + bytes;
  stats_.sent_digest[to.idx()] = mix(stats_.sent_digest[to.idx()], payload);
  ++stats_.messages_sent;
  send_frame(to, std::vector<uint64_t>(payload.begin(), payload.end()));
}

std::vector<uint64_t> Endpoint::recv(PartyId from) {
  check_peer(from);
  auto words = recv_frame(from);
  stats_.bytes_received[from.idx()] += kFrameHeaderBytes + 8 * words.size();
  ++stats_.messages_received;
  return words;
}

RingTensor Endpoint::recv(PartyId from, const Shape& shape) {
  auto words = recv(from);
  if (words.size() != numel(shape))
    throw FrameError("expected " + std::to_string(numel(shape)) +
                     " words from party " + std::to_string(from.id) +
                     ", got " + std::to_string(words.size()));
  return RingTensor(shape, std::move(words));
}

void Endpoint::round_mark(std::string_view label) {
  ++stats_.rounds;
  ++stats_.rounds_by_label[std::string(label)];
}

class InProcessNetwork::Local : public Endpoint {
 public:
  Local(PartyId self, InProcessNetwork* net) : Endpoint(self), net_(net) {}

 protected:
  void send_frame(PartyId to, std::vector<uint64_t> words) override {
    auto& b = net_->box(self(), to);
    {
      std::lock_guard<std::mutex> lk(b.mu);
      b.frames.push_back(std::move(words));
    }
    b.cv.notify_one();
  }

  std::vector<uint64_t> recv_frame(PartyId from) override {
    auto& b = net_->box(from, self());
    std::unique_lock<std::mutex> lk(b.mu);
    b.cv.wait(lk, [&] { return !b.frames.empty() || net_->is_closed(); });
    if (b.frames.empty())
      throw TransportError("in-process channel from party " +
                           std::to_string(from.id) + " closed");
    auto w = std::move(b.frames.front());
    b.frames.pop_front();
    return w;
  }

 private:
  InProcessNetwork* net_;
};

InProcessNetwork::InProcessNetwork() {
  for (PartyId p : kParties) endpoints_[p.idx()] = std::make_unique<Local>(p, this);
}

InProcessNetwork::~InProcessNetwork() = default;

Endpoint& InProcessNetwork::endpoint(PartyId p) {
  MPC3_ENFORCE(p.valid(), TopologyError, "bad party id");
  return *endpoints_[p.idx()];
}

bool InProcessNetwork::is_closed() {
  std::lock_guard<std::mutex> lk(mu_);
  return closed_;
}

void InProcessNetwork::shutdown() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    closed_ = true;
  }
  for (auto& row : boxes_)
    for (auto& b : row) {
      std::lock_guard<std::mutex> lk(b.mu);
      b.cv.notify_all();
    }
}

HostPort HostPort::parse(std::string_view s) {
  const auto colon = s.rfind(':');
  MPC3_ENFORCE(colon != std::string_view::npos && colon + 1 < s.size(),
               ConfigError, "expected host:port, got '" + std::string(s) + "'");
  HostPort hp;
  hp.host = std::string(s.substr(0, colon));
  if (hp.host.empty() || hp.host == "localhost") hp.host = "127.0.0.1";
  unsigned port = 0;
  auto tail = s.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), port);
  MPC3_ENFORCE(ec == std::errc() && ptr == tail.data() + tail.size() &&
                   port > 0 && port < 65536,
               ConfigError, "bad port in '" + std::string(s) + "'");
  hp.port = static_cast<uint16_t>(port);
  return hp;
}

std::string HostPort::str() const { return host + ":" + std::to_string(port); }

}  // namespace mpc3
