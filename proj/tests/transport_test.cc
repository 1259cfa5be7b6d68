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

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <set>
#include <string>
#include <thread>

#include "doctest.h"
#include "mpc3/context.h"
#include "mpc3/errors.h"
#include "mpc3/prf.h"
#include "mpc3/session.h"
#include "mpc3/transport.h"
#include "test_util.h"

using namespace mpc3;

namespace {

constexpr PartyId P1{1}, P2{2}, P3{3};

uint16_t free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
  socklen_t len = sizeof(sa);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  ::close(fd);
  return ntohs(sa.sin_port);
}

struct TcpRun {
  std::array<std::string, 3> errors;
  std::array<std::unique_ptr<Endpoint>, 3> eps;
};

// Starts three tcp_connect calls; ids and sessions can be overridden per slot.
TcpRun tcp_three(std::array<int, 3> ids, std::array<SessionId, 3> sessions,
                 int timeout_ms = 5000) {
  std::array<HostPort, 3> addr;
  for (auto& a : addr) a.port = free_port();
  TcpRun run;
  std::array<std::thread, 3> th;
  for (int s = 0; s < 3; ++s)
    th[s] = std::thread([&, s] {
      TcpOptions o;
      o.self = PartyId{ids[s]};
      o.listen = addr[s];
      o.peers = addr;
      o.session = sessions[s];
      o.timeout_ms = timeout_ms;
      try {
        run.eps[s] = tcp_connect(o);
      } catch (const TransportError& e) {
        run.errors[s] = e.what();
      }
    });
  for (auto& t : th) t.join();
  return run;
}

}  // namespace

TEST_SUITE("transport") {

TEST_CASE("framing counts header plus words") {
  InProcessNetwork net;
  Endpoint& a = net.endpoint(P1);
  Endpoint& b = net.endpoint(P2);
  a.send(P2, RingTensor({5}, {1, 2, 3, 4, 5}));
  CHECK(b.recv(P1, {5}) == RingTensor({5}, {1, 2, 3, 4, 5}));
  CHECK(a.stats().bytes_sent[P2.idx()] == 8 + 8 * 5);
  CHECK(b.stats().bytes_received[P1.idx()] == 8 + 8 * 5);
  a.send(P2, RingTensor({0}));
  CHECK(b.recv(P1).empty());
  CHECK(a.stats().bytes_sent[P2.idx()] == 48 + 8);
  CHECK(a.stats().messages_sent == 2);
}

TEST_CASE("fifo order and peer isolation") {
  InProcessNetwork net;
  Endpoint& a = net.endpoint(P1);
  Endpoint& b = net.endpoint(P2);
  Endpoint& c = net.endpoint(P3);
  for (uint64_t i = 0; i < 10000; ++i) a.send(P3, RingTensor({1}, {i}));
  b.send(P3, RingTensor({1}, {777}));
  CHECK(c.recv(P2, {1}).data[0] == 777u);
  bool ordered = true;
  for (uint64_t i = 0; i < 10000; ++i) ordered &= c.recv(P1, {1}).data[0] == i;
  CHECK(ordered);
  CHECK(a.stats().total_sent() == c.stats().bytes_received[P1.idx()]);
}

TEST_CASE("shape mismatch and topology") {
  InProcessNetwork net;
  net.endpoint(P1).send(P2, RingTensor({3}));
  CHECK_THROWS_AS(net.endpoint(P2).recv(P1, {4}), FrameError);
  CHECK_THROWS_AS(net.endpoint(P1).send(P1, RingTensor({1})), TopologyError);
}

TEST_CASE("shutdown wakes a blocked receiver") {
  InProcessNetwork net;
  std::string err;
  std::thread t([&] {
    try {
      net.endpoint(P1).recv(P2);
    } catch (const TransportError& e) {
      err = e.what();
    }
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  net.shutdown();
  t.join();
  CHECK(!err.empty());
}

TEST_CASE("round labels") {
  InProcessNetwork net;
  Endpoint& a = net.endpoint(P1);
  a.round_mark("mul");
  a.round_mark("mul");
  a.round_mark("trunc");
  CHECK(a.stats().rounds == 3);
  CHECK(a.stats().rounds_by_label.at("mul") == 2);
}

TEST_CASE("host port parsing") {
  const HostPort hp = HostPort::parse("10.0.0.2:7001");
  CHECK(hp.host == "10.0.0.2");
  CHECK(hp.port == 7001);
  CHECK_THROWS_AS(HostPort::parse("nohost"), ConfigError);
  CHECK_THROWS_AS(HostPort::parse("h:99999"), ConfigError);
}

TEST_CASE("tcp session") {
  const SessionId sid = derive_session_id(5);
  auto run = tcp_three({1, 2, 3}, {sid, sid, sid});
  for (const auto& e : run.errors) CHECK(e.empty());
  REQUIRE(run.eps[0]);
  std::array<std::thread, 3> th;
  std::array<RingTensor, 3> got;
  for (int s = 0; s < 3; ++s)
    th[s] = std::thread([&, s] {
      Endpoint& ep = *run.eps[s];
      const PartyId me{s + 1};
      ep.send(me.next(), RingTensor({3}, {uint64_t(s), 10, 20}));
      got[s] = ep.recv(me.prev(), {3});
    });
  for (auto& t : th) t.join();
  CHECK(got[0].data[0] == 2u);
  CHECK(got[1].data[0] == 0u);
  CHECK(got[2].data[0] == 1u);
  CHECK(run.eps[0]->stats().bytes_sent[1] == 32u);
}

TEST_CASE("tcp rejects a wrong session id") {
  const SessionId a = derive_session_id(1), b = derive_session_id(2);
  auto run = tcp_three({1, 2, 3}, {a, a, b}, 3000);
  bool saw = false;
  for (const auto& e : run.errors) saw |= e.find("session id mismatch") != std::string::npos;
  CHECK(saw);
  CHECK(!run.errors[2].empty());
}

TEST_CASE("tcp rejects a party id collision") {
  const SessionId a = derive_session_id(1);
  auto run = tcp_three({1, 2, 2}, {a, a, a}, 3000);
  bool saw = false;
  for (const auto& e : run.errors) saw |= e.find("collision") != std::string::npos;
  CHECK(saw);
}

TEST_CASE("aes prf known answer") {
  Key128 k;
  for (int i = 0; i < 16; ++i) k[i] = static_cast<uint8_t>(i);
  Prf prf(k);
  // openssl enc -aes-128-ecb -nopad on le64(1<<48|5) || le64(b), b = 0, 1.
  const auto w = prf.eval(1, 5, 4);
  CHECK(w[0] == 0xeda4fdf8837651f1ULL);
  CHECK(w[1] == 0x9eb612437f69f2e6ULL);
  CHECK(w[2] == 0xa656521fbbabcc0bULL);
  CHECK(w[3] == 0x059caf72b405dc01ULL);
  CHECK(prf.eval(1, 5, 3) == std::vector<uint64_t>(w.begin(), w.begin() + 3));
  CHECK_THROWS_AS(prf.eval(1, kMaxCounter + 1, 1), RangeError);
}

TEST_CASE("prf freshness") {
  const Key128 k1 = derive_party_key(1, P1), k3 = derive_party_key(1, P3);
  PrfKeySet ks(k1, k3, derive_session_id(1));
  ks.draw(KeyRole::kOwn, 2, 0, 4);
  ks.draw(KeyRole::kOwn, 2, 1, 4);
  CHECK_THROWS_AS(ks.draw(KeyRole::kOwn, 2, 1, 4), FreshnessError);
  CHECK_NOTHROW(ks.draw(KeyRole::kPred, 2, 1, 4));
  CHECK_NOTHROW(ks.draw(KeyRole::kOwn, 3, 0, 4));
  CHECK(ks.next_counter(KeyRole::kOwn, 2) == 2u);
}

TEST_CASE("zero shares and pairwise streams") {
  auto run = [](uint64_t j) {
    return simulate(test::seeded(9), [j](PartyContext& ctx) {
      auto z = ctx.zero_share(Purpose::kTest, j, {10000});
      auto next = ctx.pairwise_random(ctx.id().next(), Purpose::kTest, j + 500, {8});
      auto prev = ctx.pairwise_random(ctx.id().prev(), Purpose::kTest, j + 1000, {8});
      return std::array<RingTensor, 3>{z, next, prev};
    });
  };
  const auto r = run(3);
  CHECK(ring_add(ring_add(r[0][0], r[1][0]), r[2][0]) == RingTensor::zeros({10000}));
  // P2's stream with its successor P3 is P3's stream with its predecessor,
  // both keyed by k_2. P1 holds k_1 and k_3 and cannot produce it.
  CHECK(r[1][1] == simulate(test::seeded(9), [](PartyContext& ctx) {
          return ctx.pairwise_random(ctx.id().prev(), Purpose::kTest, 503, {8});
        })[2]);
  const auto again = run(3);
  CHECK(again[0][0] == r[0][0]);
  const auto other = run(4);
  size_t differ = 0;
  for (size_t i = 0; i < 10000; ++i) differ += other[0][0].data[i] != r[0][0].data[i];
  CHECK(differ >= 9900);
}

TEST_CASE("xor zero share") {
  const auto r = simulate(test::seeded(9), [](PartyContext& ctx) {
    return ctx.xor_zero_share(Purpose::kTest, {64});
  });
  CHECK(ring_xor(ring_xor(r[0], r[1]), r[2]) == RingTensor::zeros({64}));
}

}  // TEST_SUITE
