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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsync/cost_model.hpp"
#include "sparsync/dataset.hpp"
#include "sparsync/mlp.hpp"
#include "sparsync/trainer.hpp"
#include "sparsync/transport.hpp"

namespace sparsync {

enum class Mode { kTrain, kCostSweep, kSelectionBench, kCollectiveTest };

std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

struct Topology {
  enum class Kind { kThreads, kSockets };
  Kind kind = Kind::kThreads;
  int workers = 4;
  std::vector<HostPort> hosts;
  std::chrono::milliseconds timeout = kDefaultTransportTimeout;
};

struct DataSpec {
  std::string csv_path;  // empty: synthetic blobs
  BlobsSpec blobs;
};

struct ExperimentConfig {
  Mode mode = Mode::kTrain;
  TrainConfig train;
  MlpSpec model;
  DataSpec data;
  Topology topology;
  std::size_t steps = 200;
  std::string output;
  std::uint64_t seed = 0;

  // cost-sweep
  cost::CostParams cost;
  std::vector<std::uint64_t> sweep_p{2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::vector<double> sweep_D{0.001};
  cost::Unit cost_unit = cost::Unit::kElements;

  // selection-bench
  std::vector<std::size_t> bench_sizes{1u << 16, 1u << 20};
  int bench_repeats = 10;

  // collective-test
  std::size_t collective_elements = 4096;

  void validate() const;

  // key=value lines that parse back into the same configuration.
  std::vector<std::pair<std::string, std::string>> resolved() const;
};

// Parse "key = value" lines; '#' starts a comment. Unknown keys and bad
// values throw ConfigError naming the key.
std::map<std::string, std::string> parse_key_values(const std::string& text);

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

ExperimentConfig config_from_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace sparsync
