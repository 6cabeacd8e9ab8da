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

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sparsync {

inline constexpr std::chrono::milliseconds kDefaultTransportTimeout{30000};

// Reliable, ordered, exactly-once byte-frame delivery between ranks.
// A transport endpoint belongs to one rank and is used by one thread.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual int rank() const = 0;
  virtual int size() const = 0;

  virtual void send(int peer, std::span<const std::byte> bytes) = 0;
  virtual std::vector<std::byte> recv(int peer) = 0;

  // Wake every blocked peer with an error. Used for cooperative shutdown
  // when one rank fails mid-collective.
  virtual void abort() = 0;
};

// In-process backend: one mailbox queue per ordered (src, dst) pair.
class InProcessFabric : public std::enable_shared_from_this<InProcessFabric> {
 public:
  static std::shared_ptr<InProcessFabric> create(
      int world_size, std::chrono::milliseconds timeout = kDefaultTransportTimeout);

  int size() const noexcept;
  std::unique_ptr<Transport> endpoint(int rank);
  void shutdown();

  struct State;

 private:
  explicit InProcessFabric(std::shared_ptr<State> state);
  std::shared_ptr<State> state_;
};

struct HostPort {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

// "host:port"; throws ConfigError when malformed.
HostPort parse_host_port(const std::string& text);
std::vector<HostPort> parse_host_list(const std::string& comma_separated);

// Socket backend: one TCP stream per rank pair, frames prefixed with a u32
// little-endian length. Rank i listens on hosts[i]; each rank connects to
// all lower ranks and accepts from all higher ones.
std::unique_ptr<Transport> connect_socket_transport(
    int rank, const std::vector<HostPort>& hosts,
    std::chrono::milliseconds timeout = kDefaultTransportTimeout);

// Ports on 127.0.0.1 that were free at the time of the call.
std::vector<std::uint16_t> reserve_local_ports(int count);

}  // namespace sparsync
