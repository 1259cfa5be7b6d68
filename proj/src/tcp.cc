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

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <bit>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "mpc3/errors.h"
#include "mpc3/transport.h"

namespace mpc3 {

namespace {

static_assert(std::endian::native == std::endian::little,
              "wire format is little-endian; add byte swapping for this host");

constexpr char kMagic[4] = {'M', 'P', 'C', '3'};
constexpr size_t kHelloBytes = 4 + 1 + 1 + 16;
constexpr uint8_t kAccept = 1;
constexpr uint8_t kReject = 0;

using Clock = std::chrono::steady_clock;

std::string sys_error(const std::string& what) {
  return what + ": " + std::strerror(errno);
}

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { reset(); }
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.fd_;
      o.fd_ = -1;
    }
    return *this;
  }
  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

sockaddr_in resolve(const HostPort& hp) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(hp.port);
  if (::inet_pton(AF_INET, hp.host.c_str(), &sa.sin_addr) == 1) return sa;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(hp.host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw TransportError("cannot resolve host " + hp.host);
  sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return sa;
}

// Waits until fd is readable or the deadline passes.
void wait_readable(int fd, Clock::time_point deadline, const char* what) {
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - Clock::now())
                          .count();
    if (left <= 0) throw TransportError(std::string("timeout: ") + what);
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(left));
    if (r > 0) return;
    if (r < 0 && errno != EINTR) throw TransportError(sys_error("poll"));
  }
}

void write_all(int fd, const void* buf, size_t n) {
  auto* p = static_cast<const uint8_t*>(buf);
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("send"));
    }
    p += w;
    n -= static_cast<size_t>(w);
  }
}

// Returns false on clean EOF before the first byte.
bool read_all(int fd, void* buf, size_t n) {
  auto* p = static_cast<uint8_t*>(buf);
  size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, p + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw TransportError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("recv"));
    }
    got += static_cast<size_t>(r);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

std::array<uint8_t, kHelloBytes> make_hello(PartyId self, const SessionId& sid) {
  std::array<uint8_t, kHelloBytes> h{};
  std::memcpy(h.data(), kMagic, 4);
  h[4] = kWireVersion;
  h[5] = static_cast<uint8_t>(self.id);
  std::memcpy(h.data() + 6, sid.data(), sid.size());
  return h;
}

// Outgoing side of one ordered pair. A writer thread drains the queue so
// send never blocks on the peer's progress.
class Writer {
 public:
  explicit Writer(Socket s) : sock_(std::move(s)), th_([this] { loop(); }) {}
  ~Writer() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      done_ = true;
    }
    cv_.notify_one();
    th_.join();
    ::shutdown(sock_.fd(), SHUT_WR);
  }

  void push(std::vector<uint64_t> words) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (!error_.empty()) throw TransportError(error_);
      q_.push_back(std::move(words));
    }
    cv_.notify_one();
  }

 private:
  void loop() {
    for (;;) {
      std::vector<uint64_t> w;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return done_ || !q_.empty(); });
        if (q_.empty()) return;
        w = std::move(q_.front());
        q_.pop_front();
      }
      try {
        const uint64_t len = 8 * static_cast<uint64_t>(w.size());
        write_all(sock_.fd(), &len, sizeof(len));
        write_all(sock_.fd(), w.data(), len);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(mu_);
        error_ = e.what();
        q_.clear();
        return;
      }
    }
  }

  Socket sock_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<uint64_t>> q_;
  bool done_ = false;
  std::string error_;
  std::thread th_;
};

class TcpEndpoint : public Endpoint {
 public:
  TcpEndpoint(PartyId self, std::array<Socket, 3> in, std::array<Socket, 3> out)
      : Endpoint(self), in_(std::move(in)) {
    for (int i = 0; i < 3; ++i)
      if (out[i].valid()) writers_[i] = std::make_unique<Writer>(std::move(out[i]));
  }

  ~TcpEndpoint() override {
    for (auto& w : writers_) w.reset();
  }

 protected:
  void send_frame(PartyId to, std::vector<uint64_t> words) override {
    writers_[to.idx()]->push(std::move(words));
  }

  std::vector<uint64_t> recv_frame(PartyId from) override {
    const int fd = in_[from.idx()].fd();
    uint64_t len = 0;
    if (!read_all(fd, &len, sizeof(len)))
      throw TransportError("channel from party " + std::to_string(from.id) +
                           " closed");
    if (len > kMaxFrameBytes || len % 8 != 0)
      throw FrameError("bad frame length " + std::to_string(len));
    std::vector<uint64_t> w(len / 8);
    if (len && !read_all(fd, w.data(), len))
      throw TransportError("connection closed mid-frame");
    return w;
  }

 private:
  std::array<Socket, 3> in_;
  std::array<std::unique_ptr<Writer>, 3> writers_;
};

Socket open_listener(const HostPort& hp) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) throw TransportError(sys_error("socket"));
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa = resolve(hp);
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
    throw TransportError(sys_error("bind " + hp.str()));
  if (::listen(s.fd(), 8) != 0) throw TransportError(sys_error("listen"));
  return s;
}

// Accepts the two incoming connections and validates their hello.
void accept_peers(int lfd, const TcpOptions& o, Clock::time_point deadline,
                  std::array<Socket, 3>& in) {
  int accepted = 0;
  while (accepted < 2) {
    wait_readable(lfd, deadline, "waiting for peers to connect");
    Socket c(::accept(lfd, nullptr, nullptr));
    if (!c.valid()) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("accept"));
    }
    set_nodelay(c.fd());
    std::array<uint8_t, kHelloBytes> h{};
    wait_readable(c.fd(), deadline, "waiting for handshake");
    if (!read_all(c.fd(), h.data(), h.size()))
      throw TransportError("peer closed during handshake");
    std::string why;
    const PartyId from{h[5]};
    if (std::memcmp(h.data(), kMagic, 4) != 0) {
      why = "bad handshake magic";
    } else if (h[4] != kWireVersion) {
      why = "unsupported wire version " + std::to_string(h[4]);
    } else if (std::memcmp(h.data() + 6, o.session.data(), 16) != 0) {
      why = "session id mismatch";
    } else if (!from.valid() || from == o.self) {
      why = "party id collision: peer claims id " + std::to_string(h[5]);
    } else if (in[from.idx()].valid()) {
      why = "party id collision: party " + std::to_string(from.id) +
            " connected twice";
    }
    const uint8_t reply = why.empty() ? kAccept : kReject;
    write_all(c.fd(), &reply, 1);
    if (!why.empty()) throw TransportError("handshake rejected: " + why);
    in[from.idx()] = std::move(c);
    ++accepted;
  }
}

Socket connect_peer(const TcpOptions& o, PartyId peer,
                    Clock::time_point deadline) {
  const sockaddr_in sa = resolve(o.peers[peer.idx()]);
  for (;;) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw TransportError(sys_error("socket"));
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) ==
        0) {
      set_nodelay(s.fd());
      const auto hello = make_hello(o.self, o.session);
      write_all(s.fd(), hello.data(), hello.size());
      uint8_t reply = kReject;
      wait_readable(s.fd(), deadline, "waiting for handshake reply");
      if (!read_all(s.fd(), &reply, 1) || reply != kAccept)
        throw TransportError("party " + std::to_string(peer.id) +
                             " rejected the handshake");
      return s;
    }
    if (Clock::now() > deadline)
      throw TransportError(sys_error("connect to " + o.peers[peer.idx()].str()));
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace

std::unique_ptr<Endpoint> tcp_connect(const TcpOptions& o) {
  MPC3_ENFORCE(o.self.valid(), ConfigError, "party id must be 1, 2 or 3");
  const auto deadline = Clock::now() + std::chrono::milliseconds(o.timeout_ms);
  Socket listener = open_listener(o.listen);

  std::array<Socket, 3> in, out;
  std::exception_ptr accept_err;
  std::thread acceptor([&] {
    try {
      accept_peers(listener.fd(), o, deadline, in);
    } catch (...) {
      accept_err = std::current_exception();
    }
  });
  std::exception_ptr connect_err;
  try {
    for (PartyId p : kParties)
      if (p != o.self) out[p.idx()] = connect_peer(o, p, deadline);
  } catch (...) {
    connect_err = std::current_exception();
  }
  acceptor.join();
  if (accept_err) std::rethrow_exception(accept_err);
  if (connect_err) std::rethrow_exception(connect_err);
  return std::make_unique<TcpEndpoint>(o.self, std::move(in), std::move(out));
}

}  // namespace mpc3
