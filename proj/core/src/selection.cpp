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

#include "sparsync/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sparsync/error.hpp"

namespace sparsync {

namespace {

constexpr double kTrimStartRatio = 0.8;

void check_k(std::size_t k, std::size_t n, const char* who) {
  if (k < 1 || k > n) {
    throw InvalidArgument(std::string(who) + ": k=" + std::to_string(k) +
                          " outside [1, " + std::to_string(n) + "]");
  }
}

float threshold_at(const MagnitudeStats& s, double ratio) {
  const double mean = s.mean;
  const double max = s.max;
  return static_cast<float>(mean + ratio * (max - mean));
}

float below(float v) { return std::nextafter(v, -std::numeric_limits<float>::infinity()); }

// Order by magnitude descending, then index ascending.
struct ByMagnitude {
  std::span<const float> x;
  bool operator()(std::uint32_t a, std::uint32_t b) const {
    const float ma = std::fabs(x[a]);
    const float mb = std::fabs(x[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  }
};

}  // namespace

void SelectorConfig::validate() const {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw InvalidArgument("selector: ratio must be in (0, 1], got " + std::to_string(ratio));
  }
  if (!(epsilon_trim > 0.0f && epsilon_trim <= 0.8f)) {
    throw InvalidArgument("selector: epsilon_trim must be in (0, 0.8]");
  }
  if (!(epsilon_bs > 0.0f)) throw InvalidArgument("selector: epsilon_bs must be > 0");
  if (sample_interval < 1) throw InvalidArgument("selector: sample_interval must be >= 1");
}

std::string_view to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::kExact: return "exact";
    case SelectorKind::kTrimmed: return "trimmed";
    case SelectorKind::kThresholdBinarySearch: return "threshold_bs";
    case SelectorKind::kSampledBinarySearch: return "sampled_bs";
  }
  return "?";
}

std::optional<SelectorKind> parse_selector_kind(std::string_view name) {
  for (auto k : {SelectorKind::kExact, SelectorKind::kTrimmed,
                 SelectorKind::kThresholdBinarySearch, SelectorKind::kSampledBinarySearch}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::size_t top_k_count(double ratio, std::size_t n) {
  if (n == 0) return 0;
  const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

MagnitudeStats stats_mean_max_abs(std::span<const float> x) {
  if (x.empty()) throw InvalidArgument("stats_mean_max_abs: empty tensor");
  double sum = 0.0;
  float max = 0.0f;
  for (float v : x) {
    const float a = std::fabs(v);
    sum += a;
    max = std::max(max, a);
  }
  MagnitudeStats s;
  s.mean = static_cast<float>(sum / static_cast<double>(x.size()));
  s.max = max;
  // Rounding the mean can push it past max when all magnitudes are equal.
  s.mean = std::min(s.mean, s.max);
  return s;
}

std::size_t count_above(std::span<const float> x, float threshold) {
  std::size_t n = 0;
  for (float v : x) n += std::fabs(v) > threshold ? 1 : 0;
  return n;
}

SelectionResult compact_above(std::span<const float> x, float threshold) {
  SelectionResult r;
  r.threshold = threshold;
  r.passes = 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::fabs(x[i]) > threshold) {
      r.indices.push_back(static_cast<std::uint32_t>(i));
      r.values.push_back(x[i]);
    }
  }
  return r;
}

SelectionResult exact_top_k(std::span<const float> x, std::size_t k) {
  check_k(k, x.size(), "exact_top_k");
  std::vector<std::uint32_t> order(x.size());
  std::iota(order.begin(), order.end(), 0u);
  const ByMagnitude cmp{x};
  if (k < order.size()) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     order.end(), cmp);
  }
  order.resize(k);
  float kth = std::numeric_limits<float>::infinity();
  for (auto i : order) kth = std::min(kth, std::fabs(x[i]));
  std::sort(order.begin(), order.end());

  SelectionResult r;
  r.indices = std::move(order);
  r.values.reserve(k);
  for (auto i : r.indices) r.values.push_back(x[i]);
  r.threshold = below(kth);
  r.exact = true;
  r.passes = 1;
  return r;
}

SelectionResult trimmed_top_k(std::span<const float> x, std::size_t k,
                              const SelectorConfig& cfg) {
  check_k(k, x.size(), "trimmed_top_k");
  const MagnitudeStats stats = stats_mean_max_abs(x);
  std::size_t passes = 1;
  if (stats.mean == stats.max) {
    auto r = exact_top_k(x, k);
    r.passes += passes;
    return r;
  }

  const double eps = cfg.epsilon_trim;
  // Count how many threshold levels fit in [0, 0.8] so the float ratio never
  // drifts below zero from accumulated rounding.
  const auto levels = static_cast<std::size_t>(std::floor(kTrimStartRatio / eps + 1e-9)) + 1;
  float threshold = 0.0f;
  bool reached = false;
  for (std::size_t i = 0; i < levels; ++i) {
    const double ratio = std::max(0.0, kTrimStartRatio - static_cast<double>(i) * eps);
    threshold = threshold_at(stats, ratio);
    ++passes;
    if (count_above(x, threshold) >= k) {
      reached = true;
      break;
    }
  }
  if (!reached) {
    auto r = exact_top_k(x, k);
    r.passes += passes;
    return r;
  }

  const SelectionResult survivors = compact_above(x, threshold);
  ++passes;
  SelectionResult inner = exact_top_k(survivors.values, k);
  SelectionResult r;
  r.indices.reserve(k);
  r.values = std::move(inner.values);
  for (auto j : inner.indices) r.indices.push_back(survivors.indices[j]);
  r.threshold = inner.threshold;
  r.exact = true;
  r.passes = passes;
  return r;
}

SelectionResult threshold_binary_search(std::span<const float> x, std::size_t k,
                                        const SelectorConfig& cfg) {
  check_k(k, x.size(), "threshold_binary_search");
  if (!(cfg.epsilon_bs > 0.0f)) throw InvalidArgument("threshold_binary_search: epsilon <= 0");
  const MagnitudeStats stats = stats_mean_max_abs(x);
  std::size_t passes = 1;
  if (stats.mean == stats.max) {
    auto r = exact_top_k(x, k);
    r.passes += passes;
    return r;
  }

  const double eps = cfg.epsilon_bs;
  double l = 0.0;
  double r = 1.0;
  float threshold = 0.0f;
  std::size_t nnz = 0;
  bool evaluated = false;
  bool converged = false;
  // Highest threshold seen whose count reached k.
  std::optional<float> fallback;
  while (r - l > eps) {
    const double ratio = l + (r - l) / 2;
    threshold = threshold_at(stats, ratio);
    nnz = count_above(x, threshold);
    ++passes;
    evaluated = true;
    if (nnz >= k && (!fallback || threshold > *fallback)) fallback = threshold;
    if (nnz > k && 2 * k > nnz) {
      converged = true;
      break;
    } else if (2 * nnz < k) {
      r = ratio;
    } else {
      l = ratio;
    }
  }
  if (!evaluated) {
    nnz = count_above(x, threshold);
    ++passes;
  }

  SelectionResult out;
  if (converged || nnz >= k) {
    out = compact_above(x, threshold);
  } else if (fallback) {
    out = compact_above(x, *fallback);
  } else {
    out = exact_top_k(x, k);
    out.passes += passes;
    return out;
  }
  out.passes += passes;
  out.exact = false;
  return out;
}

SelectionResult sampled_threshold_search(std::span<const float> x, std::size_t k,
                                         const SelectorConfig& cfg, ThresholdCache& cache) {
  check_k(k, x.size(), "sampled_threshold_search");
  const auto interval = static_cast<std::uint64_t>(std::max(1, cfg.sample_interval));
  const bool search = cache.calls % interval == 0 || !cache.threshold;
  ++cache.calls;
  if (search) {
    SelectionResult r = threshold_binary_search(x, k, cfg);
    cache.threshold = r.threshold;
    return r;
  }
  return compact_above(x, *cache.threshold);
}

SelectionResult select(SelectorKind kind, std::span<const float> x, std::size_t k,
                       const SelectorConfig& cfg, ThresholdCache* cache) {
  switch (kind) {
    case SelectorKind::kExact: return exact_top_k(x, k);
    case SelectorKind::kTrimmed: return trimmed_top_k(x, k, cfg);
    case SelectorKind::kThresholdBinarySearch: return threshold_binary_search(x, k, cfg);
    case SelectorKind::kSampledBinarySearch:
      if (cache == nullptr) throw InvalidArgument("select: sampled search needs a cache");
      return sampled_threshold_search(x, k, cfg, *cache);
  }
  throw InvalidArgument("select: unknown selector");
}

}  // namespace sparsync
