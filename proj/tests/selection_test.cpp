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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "acceptance/oracles.hpp"
#include "sparsync/error.hpp"
#include "sparsync/rng.hpp"

namespace sparsync {
namespace {

using oracle::Distribution;

std::vector<std::uint32_t> idx(std::initializer_list<std::uint32_t> v) { return v; }

TEST(TopKCount, FloorWithMinimumOne) {
  EXPECT_EQ(top_k_count(0.001, 1 << 20), 1048u);
  EXPECT_EQ(top_k_count(0.001, 10), 1u);
  EXPECT_EQ(top_k_count(1.0, 7), 7u);
  EXPECT_EQ(top_k_count(0.01, 4096), 40u);
}

TEST(MeanMaxAbs, Examples) {
  const std::vector<float> x{1, -3, 2};
  const auto s = stats_mean_max_abs(x);
  EXPECT_FLOAT_EQ(s.mean, 2.0f);
  EXPECT_FLOAT_EQ(s.max, 3.0f);
  const std::vector<float> z(5, 0.0f);
  EXPECT_EQ(stats_mean_max_abs(z).mean, 0.0f);
  EXPECT_EQ(stats_mean_max_abs(z).max, 0.0f);
  EXPECT_THROW(stats_mean_max_abs(std::span<const float>{}), InvalidArgument);
}

TEST(MeanMaxAbs, MatchesWideOracle) {
  Rng rng(11);
  const auto x = oracle::sample(Distribution::kGaussian, 10000, rng);
  const auto s = stats_mean_max_abs(x);
  const auto [mean, max] = oracle::mean_max_abs(x);
  EXPECT_NEAR(s.mean, static_cast<double>(mean), 1e-6 * static_cast<double>(mean));
  EXPECT_EQ(s.max, static_cast<float>(max));
}

TEST(CountAbove, Examples) {
  const std::vector<float> x{1, -3, 2};
  EXPECT_EQ(count_above(x, 1.5f), 2u);
  EXPECT_EQ(count_above(x, 3.0f), 0u);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto y = oracle::sample(Distribution::kUniform, 1000, rng);
    const float thr = static_cast<float>(rng.uniform());
    EXPECT_EQ(count_above(y, thr), oracle::count_above(y, thr));
  }
}

TEST(CompactAbove, Examples) {
  const std::vector<float> x{0.1f, -2.0f, 0.3f};
  auto r = compact_above(x, 0.5f);
  EXPECT_EQ(r.indices, idx({1}));
  EXPECT_EQ(r.values, std::vector<float>{-2.0f});
  r = compact_above(x, 0.05f);
  EXPECT_EQ(r.indices, idx({0, 1, 2}));
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto y = oracle::sample(Distribution::kGaussian, 2000, rng);
    const float thr = static_cast<float>(rng.uniform(0.0, 2.0));
    const auto c = compact_above(y, thr);
    EXPECT_EQ(c.indices, oracle::indices_above(y, thr));
    for (std::size_t j = 0; j < c.size(); ++j) EXPECT_EQ(c.values[j], y[c.indices[j]]);
  }
}

TEST(ExactTopK, Examples) {
  const std::vector<float> x{1, -3, 2, 0.5f};
  const auto r = exact_top_k(x, 2);
  EXPECT_EQ(r.indices, idx({1, 2}));
  EXPECT_EQ(r.values, (std::vector<float>{-3, 2}));
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(exact_top_k(x, 4).indices, idx({0, 1, 2, 3}));
  EXPECT_THROW(exact_top_k(x, 0), InvalidArgument);
  EXPECT_THROW(exact_top_k(x, 5), InvalidArgument);
}

TEST(ExactTopK, MatchesFullSortOracle) {
  Rng rng(41);
  for (int t = 0; t < 10; ++t) {
    const auto x = oracle::sample(Distribution::kGaussian, 4096, rng);
    const auto r = exact_top_k(x, 41);
    EXPECT_EQ(r.indices, oracle::top_k(x, 41));
    for (std::size_t j = 0; j < r.size(); ++j) {
      EXPECT_EQ(r.values[j], x[r.indices[j]]);
      EXPECT_GT(std::fabs(r.values[j]), r.threshold);
    }
  }
}

TEST(TrimmedTopK, TiesGoToLowerIndex) {
  const std::vector<float> x{5, 5, 5, 5};
  EXPECT_EQ(trimmed_top_k(x, 2, {}).indices, idx({0, 1}));
  const std::vector<float> y{-5, 5, 5, -5};
  EXPECT_EQ(trimmed_top_k(y, 3, {}).indices, idx({0, 1, 2}));
}

TEST(TrimmedTopK, FullKReturnsEverything) {
  Rng rng(5);
  const auto x = oracle::sample(Distribution::kGaussian, 300, rng);
  const auto r = trimmed_top_k(x, x.size(), {});
  EXPECT_EQ(r.size(), x.size());
  EXPECT_TRUE(r.exact);
}

TEST(TrimmedTopK, GaussianLargeMatchesExact) {
  Rng rng(65);
  for (int t = 0; t < 10; ++t) {
    const auto x = oracle::sample(Distribution::kGaussian, 65536, rng);
    const auto r = trimmed_top_k(x, 65, {});
    EXPECT_EQ(r.indices, exact_top_k(x, 65).indices);
    EXPECT_EQ(r.indices, oracle::top_k(x, 65));
  }
}

TEST(TrimmedTopK, PassCountBounded) {
  Rng rng(8);
  SelectorConfig cfg;
  for (float eps : {0.05f, 0.1f, 0.2f, 0.4f}) {
    cfg.epsilon_trim = eps;
    const auto x = oracle::sample(Distribution::kGaussian, 1 << 14, rng);
    const auto r = trimmed_top_k(x, 16, cfg);
    const auto bound = static_cast<std::size_t>(std::ceil(0.8 / eps)) + 3;
    EXPECT_LE(r.passes, bound) << "eps=" << eps;
  }
}

// Property: trimmed selection never differs from the full-sort oracle.
TEST(TrimmedTopK, OracleEquivalenceProperty) {
  Rng rng(2024);
  const Distribution dists[] = {Distribution::kGaussian, Distribution::kUniform,
                                Distribution::kHeavyTailed, Distribution::kConstant};
  SelectorConfig cfg;
  for (int t = 0; t < 1200; ++t) {
    const auto n = static_cast<std::size_t>(10 + rng.below(4000));
    const auto x = oracle::sample(dists[t % 4], n, rng);
    const std::size_t k = 1 + rng.below(n);
    cfg.epsilon_trim = static_cast<float>(rng.uniform(0.02, 0.8));
    const auto r = trimmed_top_k(x, k, cfg);
    ASSERT_EQ(r.indices, oracle::top_k(x, k)) << "case " << t << " n=" << n << " k=" << k;
  }
}

TEST(ThresholdBinarySearch, ContainsTopKWhenCountReachesK) {
  SelectorConfig cfg;
  int outliers = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto x = oracle::sample(Distribution::kGaussian, 1 << 20, rng);
    const std::size_t k = 1048;
    const auto r = threshold_binary_search(x, k, cfg);
    EXPECT_FALSE(r.exact);
    ASSERT_GE(r.size(), k);
    if (!(r.size() > k && r.size() < 2 * k)) ++outliers;
    EXPECT_TRUE(oracle::is_subset(oracle::top_k(x, k), r.indices));
    EXPECT_EQ(r.indices, oracle::indices_above(x, r.threshold));
  }
  // The search can leave the (k, 2k) window and terminate on epsilon; those
  // results still hold at least k elements and contain the top k.
  RecordProperty("epsilon_terminated", outliers);
}

TEST(ThresholdBinarySearch, ConsistentWithThreshold) {
  Rng rng(99);
  SelectorConfig cfg;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::size_t>(10 + rng.below(5000));
    const auto x = oracle::sample(t % 2 ? Distribution::kUniform : Distribution::kHeavyTailed, n, rng);
    const std::size_t k = 1 + rng.below(n);
    const auto r = threshold_binary_search(x, k, cfg);
    ASSERT_GE(r.size(), k);
    for (float v : r.values) EXPECT_GT(std::fabs(v), r.threshold);
    EXPECT_TRUE(oracle::is_subset(oracle::strict_top_k(x, k), r.indices));
  }
}

TEST(ThresholdBinarySearch, DegenerateFallsBackToExact) {
  const std::vector<float> x{2, -2, 2, 2, -2};
  const auto r = threshold_binary_search(x, 2, {});
  EXPECT_EQ(r.indices, idx({0, 1}));
  EXPECT_TRUE(r.exact);
}

TEST(ThresholdBinarySearch, FullKReturnsEverything) {
  Rng rng(17);
  const auto x = oracle::sample(Distribution::kGaussian, 500, rng);
  const auto r = threshold_binary_search(x, x.size(), {});
  EXPECT_EQ(r.size(), x.size());
}

TEST(SampledSearch, IntervalOneMatchesFreshSearch) {
  SelectorConfig cfg;
  cfg.sample_interval = 1;
  ThresholdCache cache;
  Rng rng(21);
  for (int step = 0; step < 6; ++step) {
    const auto x = oracle::sample(Distribution::kGaussian, 8192, rng);
    const auto a = sampled_threshold_search(x, 8, cfg, cache);
    const auto b = threshold_binary_search(x, 8, cfg);
    EXPECT_EQ(a.indices, b.indices);
  }
}

TEST(SampledSearch, StationaryReuseMatchesFreshSearchSet) {
  SelectorConfig cfg;
  ThresholdCache cache;
  Rng rng(22);
  const auto x = oracle::sample(Distribution::kGaussian, 1 << 16, rng);
  const auto fresh = threshold_binary_search(x, 65, cfg);
  for (int step = 0; step < 10; ++step) {
    const auto r = sampled_threshold_search(x, 65, cfg, cache);
    EXPECT_EQ(r.indices, fresh.indices) << "step " << step;
  }
  EXPECT_EQ(cache.calls, 10u);
}

TEST(SampledSearch, DriftRecoversAtNextSearch) {
  SelectorConfig cfg;
  ThresholdCache cache;
  Rng rng(23);
  const auto base = oracle::sample(Distribution::kGaussian, 1 << 16, rng);
  // Pick a k for which a fresh search ends inside its break window.
  std::size_t k = 40;
  for (; k < 400; ++k) {
    const auto n = threshold_binary_search(base, k, cfg).size();
    if (n > k && n < 2 * k) break;
  }
  ASSERT_LT(k, 400u);
  for (int step = 0; step < 10; ++step) {
    std::vector<float> x = base;
    if (step >= 3) {
      for (auto& v : x) v *= 10.0f;
    }
    const auto r = sampled_threshold_search(x, k, cfg, cache);
    if (step == 3) EXPECT_GT(r.size(), 2 * k);  // stale threshold after the jump
    if (step == 5) {
      EXPECT_GT(r.size(), k);
      EXPECT_LT(r.size(), 2 * k);
    }
  }
}

TEST(SampledSearch, EmptyCacheSearches) {
  SelectorConfig cfg;
  cfg.sample_interval = 5;
  ThresholdCache cache;
  cache.calls = 3;  // would be a reuse step
  Rng rng(24);
  const auto x = oracle::sample(Distribution::kGaussian, 4096, rng);
  const auto r = sampled_threshold_search(x, 10, cfg, cache);
  EXPECT_EQ(r.indices, threshold_binary_search(x, 10, cfg).indices);
  EXPECT_TRUE(cache.threshold.has_value());
}

TEST(SelectorKind, RoundTripNames) {
  for (auto k : {SelectorKind::kExact, SelectorKind::kTrimmed,
                 SelectorKind::kThresholdBinarySearch, SelectorKind::kSampledBinarySearch}) {
    EXPECT_EQ(parse_selector_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_selector_kind("bogus").has_value());
}

TEST(SelectorConfig, Validation) {
  SelectorConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.ratio = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.sample_interval = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Select, SampledNeedsCache) {
  const std::vector<float> x{1, 2, 3};
  EXPECT_THROW(select(SelectorKind::kSampledBinarySearch, x, 1, {}), InvalidArgument);
}

}  // namespace
}  // namespace sparsync
