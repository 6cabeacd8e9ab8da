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

#include "sparsync/config.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "sparsync/error.hpp"
#include "sparsync/experiment.hpp"

namespace sparsync {
namespace {

std::string to_text(const ExperimentConfig& cfg) {
  std::string text;
  for (const auto& [k, v] : cfg.resolved()) text += k + " = " + v + "\n";
  return text;
}

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(ExperimentConfig{}.validate()); }

TEST(Config, ParsesKeyValuesAndComments) {
  const auto kv = parse_key_values("# comment\n  ratio = 0.01  # trailing\n\nselector=exact\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("ratio"), "0.01");
  EXPECT_EQ(kv.at("selector"), "exact");
  EXPECT_THROW(parse_key_values("just words\n"), ConfigError);
}

TEST(Config, AppliesSettings) {
  const auto cfg = config_from_text(
      "mode = cost-sweep\nworkers = 8\nselector = threshold_bs\nquantize = true\n"
      "warmup = schedule:0.25,0.0625\nclip_norm = 2.5\nmodel_sizes = 64,16,2\n"
      "sweep_p = 2,4\nsweep_D = 0.001,0.01\ncost_unit = bytes\n");
  EXPECT_EQ(cfg.mode, Mode::kCostSweep);
  EXPECT_EQ(cfg.topology.workers, 8);
  EXPECT_EQ(cfg.train.selector, SelectorKind::kThresholdBinarySearch);
  EXPECT_TRUE(cfg.train.quantize);
  EXPECT_EQ(cfg.train.warmup.kind, WarmupSchedule::Kind::kRatioSchedule);
  EXPECT_EQ(cfg.train.warmup.ratios, (std::vector<double>{0.25, 0.0625}));
  ASSERT_TRUE(cfg.train.clip_norm.has_value());
  EXPECT_FLOAT_EQ(*cfg.train.clip_norm, 2.5f);
  EXPECT_EQ(cfg.model.sizes, (std::vector<std::size_t>{64, 16, 2}));
  EXPECT_EQ(cfg.sweep_D.size(), 2u);
  EXPECT_EQ(cfg.cost_unit, cost::Unit::kBytes);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ResolvedRoundTrips) {
  auto cfg = config_from_text(
      "selector = sampled_bs\nratio = 0.0123\nmomentum = 0.85\nwarmup = dense:3\n"
      "topology = sockets\nworkers = 2\nhosts = 127.0.0.1:9000,127.0.0.1:9001\nlr = 0.07\n");
  const auto again = config_from_text(to_text(cfg));
  EXPECT_EQ(cfg.resolved(), again.resolved());
  EXPECT_EQ(again.topology.hosts.size(), 2u);
  EXPECT_EQ(again.train.warmup.dense_epochs, 3u);
}

TEST(Config, Errors) {
  EXPECT_THROW(config_from_text("no_such_key = 1\n"), ConfigError);
  EXPECT_THROW(config_from_text("ratio = abc\n"), ConfigError);
  EXPECT_THROW(config_from_text("selector = fastest\n"), ConfigError);
  EXPECT_THROW(config_from_text("warmup = sometimes\n"), ConfigError);
  EXPECT_THROW(config_from_text("quantize = maybe\n"), ConfigError);
  EXPECT_THROW(config_from_text("workers = 3\n").validate(), ConfigError);
  EXPECT_THROW(config_from_text("selector = sampled_bs\nquantize = true\n").validate(), ConfigError);
  EXPECT_THROW(config_from_text("topology = sockets\nworkers = 2\n").validate(), ConfigError);
  EXPECT_THROW(config_from_text("dim = 10\n").validate(), ConfigError);
  EXPECT_THROW(config_from_text("mode = cost-sweep\nsweep_p = 3\n").validate(), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/sparsync.conf"), ConfigError);
}

TEST(Config, ErrorNamesTheKey) {
  try {
    config_from_text("batch_size = -4\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("batch_size"), std::string::npos);
  }
}

TEST(Experiment, HeaderEmbedsResolvedConfig) {
  ExperimentConfig cfg;
  std::ostringstream os;
  write_config_header(cfg, os);
  const std::string h = os.str();
  for (const auto& [k, v] : cfg.resolved()) {
    EXPECT_NE(h.find("# " + k + " = " + v), std::string::npos) << k;
  }
}

TEST(Experiment, CostSweepCsv) {
  auto cfg = config_from_text("mode = cost-sweep\nelements = 1000000\nbeta = 1e-9\nsweep_p = 2,4,128\n");
  std::ostringstream os;
  run_cost_sweep(cfg, os);
  const std::string s = os.str();
  EXPECT_NE(s.find("p,D,t_sparse,t_dense,speedup,bandwidth_ratio"), std::string::npos);
  EXPECT_NE(s.find("128,0.001,"), std::string::npos);
}

}  // namespace
}  // namespace sparsync
