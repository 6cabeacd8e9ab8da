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

#include "sparsync/transport.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <numeric>
#include <thread>

#include "acceptance/harness.hpp"
#include "sparsync/error.hpp"
#include "sparsync/rng.hpp"

namespace sparsync {
namespace {

using harness::Backend;

std::vector<std::byte> random_bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::byte> b(n);
  for (auto& x : b) x = static_cast<std::byte>(rng.below(256));
  return b;
}

std::uint64_t fnv1a(std::span<const std::byte> b) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto x : b) {
    h ^= static_cast<std::uint64_t>(x);
    h *= 1099511628211ull;
  }
  return h;
}

class BothBackends : public ::testing::TestWithParam<Backend> {};

TEST_P(BothBackends, SendRecvSeventeenBytes) {
  const auto payload = random_bytes(17, 1);
  auto got = harness::run_ranks<std::vector<std::byte>>(2, GetParam(), [&](Communicator& c) {
    if (c.rank() == 0) {
      c.transport().send(1, payload);
      return std::vector<std::byte>{};
    }
    return c.transport().recv(0);
  });
  EXPECT_EQ(got[1], payload);
}

TEST_P(BothBackends, OrderedDelivery) {
  auto got = harness::run_ranks<std::vector<std::vector<std::byte>>>(
      2, GetParam(), [&](Communicator& c) {
        std::vector<std::vector<std::byte>> r;
        if (c.rank() == 0) {
          c.transport().send(1, random_bytes(3, 10));
          c.transport().send(1, random_bytes(5, 11));
          c.transport().send(1, {});
        } else {
          for (int i = 0; i < 3; ++i) r.push_back(c.transport().recv(0));
        }
        return r;
      });
  ASSERT_EQ(got[1].size(), 3u);
  EXPECT_EQ(got[1][0], random_bytes(3, 10));
  EXPECT_EQ(got[1][1], random_bytes(5, 11));
  EXPECT_TRUE(got[1][2].empty());
}

TEST_P(BothBackends, TenMegabytesBitIdentical) {
  const auto payload = random_bytes(10u << 20, 2);
  const auto expect = fnv1a(payload);
  auto got = harness::run_ranks<std::uint64_t>(2, GetParam(), [&](Communicator& c) {
    const auto back = c.exchange(1 - c.rank(), payload, 0);
    return fnv1a(back);
  });
  EXPECT_EQ(got[0], expect);
  EXPECT_EQ(got[1], expect);
}

TEST_P(BothBackends, RecvTimesOut) {
  const auto start = std::chrono::steady_clock::now();
  try {
    harness::run_ranks<int>(
        2, GetParam(),
        [](Communicator& c) {
          if (c.rank() == 0) c.transport().recv(1);
          else std::this_thread::sleep_for(std::chrono::milliseconds(600));
          return 0;
        },
        std::chrono::milliseconds(200));
    FAIL() << "expected a timeout";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.rank(), 0);
  }
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
}

INSTANTIATE_TEST_SUITE_P(Transport, BothBackends,
                         ::testing::Values(Backend::kThreads, Backend::kSockets),
                         [](const auto& info) { return std::string(harness::name(info.param)); });

TEST(InProcess, ShutdownWakesBlockedReceiver) {
  auto fabric = InProcessFabric::create(2, std::chrono::seconds(30));
  auto ep = fabric->endpoint(0);
  std::jthread stopper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    fabric->shutdown();
  });
  EXPECT_THROW(ep->recv(1), TransportError);
}

TEST(InProcess, InvalidPeer) {
  auto fabric = InProcessFabric::create(2);
  auto ep = fabric->endpoint(0);
  EXPECT_THROW(ep->send(5, {}), TransportError);
}

TEST(HostList, Parsing) {
  const auto h = parse_host_port("10.0.0.1:5000");
  EXPECT_EQ(h.host, "10.0.0.1");
  EXPECT_EQ(h.port, 5000);
  EXPECT_EQ(parse_host_list("a:1,b:2").size(), 2u);
  EXPECT_THROW(parse_host_port("nohost"), ConfigError);
  EXPECT_THROW(parse_host_port("h:99999"), ConfigError);
  EXPECT_THROW(parse_host_port("h:x"), ConfigError);
}

TEST(Communicator, RejectsNonPowerOfTwo) {
  auto fabric = InProcessFabric::create(3);
  EXPECT_THROW(Communicator(fabric->endpoint(0)), Error);
}

}  // namespace
}  // namespace sparsync
