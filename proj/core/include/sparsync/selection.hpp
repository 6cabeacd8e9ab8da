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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sparsync/tensor.hpp"

namespace sparsync {

// Communication-set picked out of a residual tensor.
//
// indices are strictly increasing and values[j] == source[indices[j]].
// Every selected element satisfies |v| > threshold. For threshold-based
// results no excluded element does; for exact results the threshold is the
// largest float below the k-th magnitude, so excluded ties may also exceed it.
struct SelectionResult {
  std::vector<std::uint32_t> indices;
  std::vector<float> values;
  float threshold = 0.0f;
  bool exact = false;
  // Full-array passes performed (statistics, counts, compaction).
  std::size_t passes = 0;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
};

struct SelectorConfig {
  double ratio = 0.001;
  float epsilon_trim = 0.2f;
  float epsilon_bs = 1e-3f;
  int sample_interval = 5;

  void validate() const;
};

enum class SelectorKind { kExact, kTrimmed, kThresholdBinarySearch, kSampledBinarySearch };

std::string_view to_string(SelectorKind kind);
std::optional<SelectorKind> parse_selector_kind(std::string_view name);

// Per-worker, per-layer state for threshold reuse. Never shared.
struct ThresholdCache {
  std::optional<float> threshold;
  std::uint64_t calls = 0;
};

struct MagnitudeStats {
  float mean = 0.0f;
  float max = 0.0f;
};

// k = max(1, floor(ratio * n)), clamped to n.
std::size_t top_k_count(double ratio, std::size_t n);

MagnitudeStats stats_mean_max_abs(std::span<const float> x);

// |{i : |x[i]| > threshold}|
std::size_t count_above(std::span<const float> x, float threshold);

// Stream compaction of |x[i]| > threshold, in index order.
SelectionResult compact_above(std::span<const float> x, float threshold);

// Exactly k largest magnitudes; ties go to the lower index.
SelectionResult exact_top_k(std::span<const float> x, std::size_t k);

// Lower a threshold from mean + 0.8 (max - mean) in epsilon_trim steps until
// at least k elements survive, then run exact selection on the survivors.
SelectionResult trimmed_top_k(std::span<const float> x, std::size_t k,
                              const SelectorConfig& cfg);

// Binary search on the threshold ratio until the count falls in (k, 2k) or
// the search interval shrinks below epsilon_bs. Approximate: returns at
// least k elements when it can, possibly up to 2k.
SelectionResult threshold_binary_search(std::span<const float> x, std::size_t k,
                                        const SelectorConfig& cfg);

// threshold_binary_search every sample_interval calls; in between, one
// compaction against the cached threshold.
SelectionResult sampled_threshold_search(std::span<const float> x, std::size_t k,
                                         const SelectorConfig& cfg,
                                         ThresholdCache& cache);

// Dispatch on kind. cache is required for kSampledBinarySearch.
SelectionResult select(SelectorKind kind, std::span<const float> x, std::size_t k,
                       const SelectorConfig& cfg, ThresholdCache* cache = nullptr);

}  // namespace sparsync
