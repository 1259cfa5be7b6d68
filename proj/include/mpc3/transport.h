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
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpc3/ring.h"

namespace mpc3 {

// Party ids are 1, 2, 3; next/prev wrap cyclically.
struct PartyId {
  int id = 1;

  constexpr PartyId next() const { return PartyId{id % 3 + 1}; }
  constexpr PartyId prev() const { return PartyId{(id + 1) % 3 + 1}; }
  constexpr int idx() const { return id - 1; }
  static PartyId from_index(int i) { return PartyId{i % 3 + 1}; }
  bool valid() const { return id >= 1 && id <= 3; }
  auto operator<=>(const PartyId&) const = default;
};

inline constexpr std::array<PartyId, 3> kParties = {PartyId{1}, PartyId{2},
                                                    PartyId{3}};

using SessionId = std::array<uint8_t, 16>;

struct CommStats {
  // Indexed by peer idx(); the own slot stays zero.
  std::array<uint64_t, 3> bytes_sent{};
  std::array<uint64_t, 3> bytes_received{};
  // Running word digest of everything sent to each peer.
  std::array<uint64_t, 3> sent_digest{};
  uint64_t messages_sent = 0;
  uint64_t messages_received = 0;
  uint64_t rounds = 0;
  std::map<std::string, uint64_t> rounds_by_label;

  uint64_t total_sent() const;
  uint64_t total_received() const;
  CommStats minus(const CommStats& earlier) const;
};

inline constexpr uint64_t kFrameHeaderBytes = 8;
inline constexpr uint64_t kMaxFrameBytes = uint64_t{1} << 32;

// One party's view of its two point-to-point channels.
class Endpoint {
 public:
  explicit Endpoint(PartyId self) : self_(self) {}
  virtual ~Endpoint() = default;
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  PartyId self() const { return self_; }

  void send(PartyId to, std::span<const uint64_t> payload);
  std::vector<uint64_t> recv(PartyId from);

  void send(PartyId to, const RingTensor& t) { send(to, t.data); }
  // Receives a frame and checks that it carries numel(shape) words.
  RingTensor recv(PartyId from, const Shape& shape);

  void round_mark(std::string_view label);

  const CommStats& stats() const { return stats_; }

 protected:
  virtual void send_frame(PartyId to, std::vector<uint64_t> words) = 0;
  virtual std::vector<uint64_t> recv_frame(PartyId from) = 0;

 private:
  void check_peer(PartyId p) const;

  PartyId self_;
  CommStats stats_;
};

// Three endpoints in one process joined by FIFO mailboxes.
class InProcessNetwork {
 public:
  InProcessNetwork();
  ~InProcessNetwork();

  Endpoint& endpoint(PartyId p);
  // Wakes blocked receivers; further recv calls throw TransportError.
  void shutdown();

  struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<uint64_t>> frames;
  };

 private:
  class Local;
  friend class Local;

  Mailbox& box(PartyId from, PartyId to) { return boxes_[from.idx()][to.idx()]; }
  bool is_closed();

  std::array<std::array<Mailbox, 3>, 3> boxes_;
  std::mutex mu_;
  bool closed_ = false;
  std::array<std::unique_ptr<Endpoint>, 3> endpoints_;
};

struct HostPort {
  std::string host = "127.0.0.1";
  uint16_t port = 0;

  static HostPort parse(std::string_view s);
  std::string str() const;
};

struct TcpOptions {
  PartyId self;
  HostPort listen;
  // Address of every party, indexed by idx(); the own entry is ignored.
  std::array<HostPort, 3> peers;
  SessionId session{};
  int timeout_ms = 30000;
};

inline constexpr uint8_t kWireVersion = 1;

// Opens one connection per ordered pair and runs the session handshake.
// Throws TransportError on timeout, bad magic, version, session id, or a
// party id that is not an expected peer.
std::unique_ptr<Endpoint> tcp_connect(const TcpOptions& opts);

}  // namespace mpc3
