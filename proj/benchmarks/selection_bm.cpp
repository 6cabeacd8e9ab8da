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

// Communication-set selection on Gaussian residuals at a 0.1% ratio.

#include <benchmark/benchmark.h>

#include <vector>

#include "sparsync/rng.hpp"
#include "sparsync/selection.hpp"

namespace {

std::vector<float> gaussian(std::size_t n) {
  sparsync::Rng rng(42);
  std::vector<float> x(n);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  return x;
}

void run(benchmark::State& state, sparsync::SelectorKind kind) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = gaussian(n);
  sparsync::SelectorConfig cfg;
  const std::size_t k = sparsync::top_k_count(cfg.ratio, n);
  sparsync::ThresholdCache cache;
  std::size_t selected = 0;
  for (auto _ : state) {
    auto r = sparsync::select(kind, x, k, cfg, &cache);
    selected = r.size();
    benchmark::DoNotOptimize(r);
  }
  state.counters["k"] = static_cast<double>(k);
  state.counters["selected"] = static_cast<double>(selected);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_Exact(benchmark::State& s) { run(s, sparsync::SelectorKind::kExact); }
void BM_Trimmed(benchmark::State& s) { run(s, sparsync::SelectorKind::kTrimmed); }
void BM_ThresholdSearch(benchmark::State& s) { run(s, sparsync::SelectorKind::kThresholdBinarySearch); }
void BM_SampledSearch(benchmark::State& s) { run(s, sparsync::SelectorKind::kSampledBinarySearch); }

BENCHMARK(BM_Exact)->RangeMultiplier(16)->Range(1 << 12, 1 << 22)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Trimmed)->RangeMultiplier(16)->Range(1 << 12, 1 << 22)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ThresholdSearch)->RangeMultiplier(16)->Range(1 << 12, 1 << 22)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SampledSearch)->RangeMultiplier(16)->Range(1 << 12, 1 << 22)->Unit(benchmark::kMicrosecond);

}  // namespace
