// Copyright 2026 The sparsync Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <thread>

#include "sparsync/error.hpp"
#include "sparsync/transport.hpp"

namespace sparsync {

namespace {

using Clock = std::chrono::steady_clock;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const HostPort& hp, int rank) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(hp.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw TransportError("cannot resolve " + hp.host + ": " + ::gai_strerror(rc), rank);
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(hp.port);
  return addr;
}

void set_timeouts(int fd, std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

void write_all(int fd, const std::byte* data, std::size_t n, int rank, int peer) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw TransportError("send to rank " + std::to_string(peer) + " timed out", rank);
      }
      throw TransportError("send to rank " + std::to_string(peer) + " failed: " + errno_text(),
                           rank);
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

void read_all(int fd, std::byte* data, std::size_t n, int rank, int peer) {
  while (n > 0) {
    const ssize_t r = ::recv(fd, data, n, 0);
    if (r == 0) throw TransportError("rank " + std::to_string(peer) + " disconnected", rank);
    if (r < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw TransportError("timed out waiting for rank " + std::to_string(peer), rank);
      }
      throw TransportError("recv from rank " + std::to_string(peer) + " failed: " +
                               errno_text(),
                           rank);
    }
    data += r;
    n -= static_cast<std::size_t>(r);
  }
}

void put_u32(std::byte* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::byte>((v >> (8 * i)) & 0xffu);
}

std::uint32_t get_u32(const std::byte* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

class SocketTransport final : public Transport {
 public:
  SocketTransport(int rank, std::vector<Fd> peers) : rank_(rank), peers_(std::move(peers)) {}

  int rank() const override { return rank_; }
  int size() const override { return static_cast<int>(peers_.size()); }

  void send(int peer, std::span<const std::byte> bytes) override {
    const int fd = peer_fd(peer);
    if (bytes.size() > 0xffffffffu) throw TransportError("frame exceeds u32 length", rank_);
    std::byte header[4];
    put_u32(header, static_cast<std::uint32_t>(bytes.size()));
    write_all(fd, header, 4, rank_, peer);
    write_all(fd, bytes.data(), bytes.size(), rank_, peer);
  }

  std::vector<std::byte> recv(int peer) override {
    const int fd = peer_fd(peer);
    std::byte header[4];
    read_all(fd, header, 4, rank_, peer);
    std::vector<std::byte> frame(get_u32(header));
    read_all(fd, frame.data(), frame.size(), rank_, peer);
    return frame;
  }

  void abort() override {
    for (auto& fd : peers_) {
      if (fd.valid()) ::shutdown(fd.get(), SHUT_RDWR);
    }
  }

 private:
  int peer_fd(int peer) const {
    if (peer < 0 || peer >= size() || peer == rank_) {
      throw TransportError("invalid peer " + std::to_string(peer), rank_);
    }
    return peers_[static_cast<std::size_t>(peer)].get();
  }

  int rank_;
  std::vector<Fd> peers_;
};

}  // namespace

HostPort parse_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("expected host:port, got '" + text + "'");
  }
  HostPort hp;
  hp.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    const unsigned long port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port == 0 || port > 65535) throw std::out_of_range("");
    hp.port = static_cast<std::uint16_t>(port);
  } catch (const std::logic_error&) {
    throw ConfigError("bad port in '" + text + "'");
  }
  return hp;
}

std::vector<HostPort> parse_host_list(const std::string& comma_separated) {
  std::vector<HostPort> out;
  std::size_t start = 0;
  while (start <= comma_separated.size()) {
    auto end = comma_separated.find(',', start);
    if (end == std::string::npos) end = comma_separated.size();
    std::string item = comma_separated.substr(start, end - start);
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(parse_host_port(item.substr(b, e - b + 1)));
    start = end + 1;
  }
  return out;
}

std::unique_ptr<Transport> connect_socket_transport(int rank,
                                                    const std::vector<HostPort>& hosts,
                                                    std::chrono::milliseconds timeout) {
  const int p = static_cast<int>(hosts.size());
  if (rank < 0 || rank >= p) {
    throw TransportError("rank outside host list of size " + std::to_string(p), rank);
  }
  const auto deadline = Clock::now() + timeout;
  std::vector<Fd> peers(static_cast<std::size_t>(p));

  Fd listener;
  if (rank + 1 < p) {
    listener = Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listener.valid()) throw TransportError("socket: " + errno_text(), rank);
    int one = 1;
    ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = resolve(hosts[static_cast<std::size_t>(rank)], rank);
    if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw TransportError("bind " + hosts[static_cast<std::size_t>(rank)].to_string() + ": " +
                               errno_text(),
                           rank);
    }
    if (::listen(listener.get(), p) != 0) throw TransportError("listen: " + errno_text(), rank);
  }

  for (int peer = 0; peer < rank; ++peer) {
    const sockaddr_in addr = resolve(hosts[static_cast<std::size_t>(peer)], rank);
    for (;;) {
      Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
      if (!fd.valid()) throw TransportError("socket: " + errno_text(), rank);
      if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
        set_timeouts(fd.get(), timeout);
        std::byte hello[4];
        put_u32(hello, static_cast<std::uint32_t>(rank));
        write_all(fd.get(), hello, 4, rank, peer);
        peers[static_cast<std::size_t>(peer)] = std::move(fd);
        break;
      }
      if (Clock::now() >= deadline) {
        throw TransportError("could not connect to rank " + std::to_string(peer) + " at " +
                                 hosts[static_cast<std::size_t>(peer)].to_string(),
                             rank);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  for (int accepted = 0; accepted < p - 1 - rank; ++accepted) {
    pollfd pfd{listener.get(), POLLIN, 0};
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0 || ::poll(&pfd, 1, static_cast<int>(left)) <= 0) {
      throw TransportError("timed out waiting for higher ranks to connect", rank);
    }
    Fd fd(::accept(listener.get(), nullptr, nullptr));
    if (!fd.valid()) throw TransportError("accept: " + errno_text(), rank);
    set_timeouts(fd.get(), timeout);
    std::byte hello[4];
    read_all(fd.get(), hello, 4, rank, -1);
    const auto peer = static_cast<int>(get_u32(hello));
    if (peer <= rank || peer >= p || peers[static_cast<std::size_t>(peer)].valid()) {
      throw TransportError("unexpected hello from rank " + std::to_string(peer), rank);
    }
    peers[static_cast<std::size_t>(peer)] = std::move(fd);
  }

  return std::make_unique<SocketTransport>(rank, std::move(peers));
}

std::vector<std::uint16_t> reserve_local_ports(int count) {
  std::vector<Fd> held;
  std::vector<std::uint16_t> ports;
  for (int i = 0; i < count; ++i) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) throw TransportError("socket: " + errno_text(), -1);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw TransportError("bind: " + errno_text(), -1);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    ports.push_back(ntohs(addr.sin_port));
    held.push_back(std::move(fd));
  }
  return ports;
}

}  // namespace sparsync
