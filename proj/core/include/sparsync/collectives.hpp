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

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sparsync/codec.hpp"
#include "sparsync/tensor.hpp"
#include "sparsync/transport.hpp"

namespace sparsync {

struct TransportStats {
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t steps = 0;

  TransportStats& operator+=(const TransportStats& o) {
    messages_sent += o.messages_sent;
    bytes_sent += o.bytes_sent;
    steps += o.steps;
    return *this;
  }
  friend TransportStats operator-(TransportStats a, const TransportStats& b) {
    a.messages_sent -= b.messages_sent;
    a.bytes_sent -= b.bytes_sent;
    a.steps -= b.steps;
    return a;
  }
};

bool is_power_of_two(std::uint64_t n);
int log2_exact(std::uint64_t n);

// A rank's view of the world. World size must be a power of two.
class Communicator {
 public:
  explicit Communicator(std::unique_ptr<Transport> transport);

  int rank() const noexcept { return rank_; }
  int size() const noexcept { return size_; }

  // One pairwise exchange step. The lower rank sends first, the higher rank
  // receives first, so blocking stream backends cannot deadlock.
  std::vector<std::byte> exchange(int peer, std::span<const std::byte> bytes, int step);

  const TransportStats& stats() const noexcept { return stats_; }
  void reset_stats() noexcept { stats_ = {}; }

  Transport& transport() noexcept { return *transport_; }

 private:
  std::unique_ptr<Transport> transport_;
  int rank_;
  int size_;
  TransportStats stats_;
};

// Recursive-doubling allgather of variable-length frames. Returns all p
// messages in rank order; identical on every rank.
std::vector<SparseMessage> allgather_sparse(Communicator& comm, const SparseMessage& local);

struct ReducedSegment {
  DenseTensor values;
  std::size_t offset = 0;
};

// Recursive-halving reduce-scatter. The input is zero-padded to a multiple
// of p; rank r ends with the sum of segment r of the padded vector.
ReducedSegment reduce_scatter_halving(Communicator& comm, const DenseTensor& x);

// Rabenseifner allreduce: reduce-scatter then recursive-doubling allgather.
DenseTensor allreduce_dense(Communicator& comm, const DenseTensor& x);

}  // namespace sparsync
