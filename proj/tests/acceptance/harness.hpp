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

// Launch one thread per rank over either transport backend and collect the
// per-rank results. Any exception from a rank is rethrown on the caller.

#include <chrono>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "sparsync/collectives.hpp"
#include "sparsync/transport.hpp"

namespace sparsync::harness {

enum class Backend { kThreads, kSockets };

inline const char* name(Backend b) { return b == Backend::kThreads ? "threads" : "sockets"; }

template <typename R>
std::vector<R> run_ranks(int p, Backend backend, const std::function<R(Communicator&)>& body,
                         std::chrono::milliseconds timeout = std::chrono::seconds(20)) {
  std::vector<R> out(static_cast<std::size_t>(p));
  std::exception_ptr first;
  std::mutex mu;
  std::shared_ptr<InProcessFabric> fabric;
  std::vector<HostPort> hosts;
  if (backend == Backend::kThreads) {
    fabric = InProcessFabric::create(p, timeout);
  } else {
    for (auto port : reserve_local_ports(p)) hosts.push_back({"127.0.0.1", port});
  }
  {
    std::vector<std::jthread> threads;
    for (int r = 0; r < p; ++r) {
      threads.emplace_back([&, r] {
        try {
          auto t = backend == Backend::kThreads ? fabric->endpoint(r)
                                                : connect_socket_transport(r, hosts, timeout);
          Communicator comm(std::move(t));
          out[static_cast<std::size_t>(r)] = body(comm);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          if (fabric) fabric->shutdown();
        }
      });
    }
  }
  if (first) std::rethrow_exception(first);
  return out;
}

}  // namespace sparsync::harness
