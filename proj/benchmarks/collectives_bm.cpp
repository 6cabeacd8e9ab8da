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

// Collectives over the in-process transport; one iteration runs the
// collective on every rank.

#include <benchmark/benchmark.h>

#include <thread>
#include <vector>

#include "sparsync/collectives.hpp"
#include "sparsync/selection.hpp"

namespace {

template <typename Body>
void on_all_ranks(int p, Body body) {
  auto fabric = sparsync::InProcessFabric::create(p);
  std::vector<std::jthread> threads;
  for (int r = 0; r < p; ++r) {
    threads.emplace_back([&, r] {
      sparsync::Communicator comm(fabric->endpoint(r));
      body(comm);
    });
  }
}

void BM_AllgatherSparse(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto count = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    on_all_ranks(p, [&](sparsync::Communicator& c) {
      sparsync::SparseMessage m;
      for (std::size_t j = 0; j < count; ++j) {
        m.indices.push_back(static_cast<std::uint32_t>(j * p + static_cast<std::size_t>(c.rank())));
        m.payload.push_back(1.0f);
      }
      benchmark::DoNotOptimize(sparsync::allgather_sparse(c, m));
    });
  }
}

void BM_AllreduceDense(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    on_all_ranks(p, [&](sparsync::Communicator& c) {
      benchmark::DoNotOptimize(sparsync::allreduce_dense(c, sparsync::DenseTensor(n, 1.0f)));
    });
  }
}

BENCHMARK(BM_AllgatherSparse)->ArgsProduct({{2, 4, 8}, {1 << 10}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AllreduceDense)->ArgsProduct({{2, 4, 8}, {1 << 20}})->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
