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

#include <benchmark/benchmark.h>

#include "sparsync/codec.hpp"
#include "sparsync/rng.hpp"

namespace {

sparsync::SparseMessage message(std::size_t count, bool quantized) {
  sparsync::SparseMessage m;
  m.mode = quantized ? sparsync::PayloadMode::kQuantMean : sparsync::PayloadMode::kDenseValues;
  for (std::size_t j = 0; j < count; ++j) {
    m.indices.push_back(static_cast<std::uint32_t>(j * 7));
    if (!quantized) m.payload.push_back(static_cast<float>(j));
  }
  if (quantized) m.payload.push_back(0.5f);
  return m;
}

void BM_Encode(benchmark::State& state) {
  const auto m = message(static_cast<std::size_t>(state.range(0)), state.range(1) != 0);
  for (auto _ : state) benchmark::DoNotOptimize(sparsync::encode(m));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(sparsync::encoded_size(m)));
}

void BM_Decode(benchmark::State& state) {
  const auto bytes = sparsync::encode(message(static_cast<std::size_t>(state.range(0)), state.range(1) != 0));
  for (auto _ : state) benchmark::DoNotOptimize(sparsync::decode(bytes));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}

void BM_Decompress(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  const auto m = message(count, state.range(1) != 0);
  sparsync::DenseTensor dst(count * 7);
  for (auto _ : state) {
    sparsync::decompress_apply(dst, m, 1.0f);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(count));
}

BENCHMARK(BM_Encode)->ArgsProduct({{1 << 10, 1 << 16}, {0, 1}});
BENCHMARK(BM_Decode)->ArgsProduct({{1 << 10, 1 << 16}, {0, 1}});
BENCHMARK(BM_Decompress)->ArgsProduct({{1 << 10, 1 << 16}, {0, 1}});

}  // namespace
