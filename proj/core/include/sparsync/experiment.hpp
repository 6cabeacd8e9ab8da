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

#include <optional>
#include <ostream>

#include "sparsync/config.hpp"

namespace sparsync {

// Every mode writes CSV to `out`, preceded by '#'-prefixed lines holding
// the resolved configuration. Human-readable progress goes to `log`.
//
// Threads topology runs all ranks in-process. Sockets topology runs one
// rank (given by `rank`) and only rank 0 writes rows.
void run_train(const ExperimentConfig& cfg, std::optional<int> rank, std::ostream& out,
               std::ostream& log);
void run_cost_sweep(const ExperimentConfig& cfg, std::ostream& out);
void run_selection_bench(const ExperimentConfig& cfg, std::ostream& out);
void run_collective_test(const ExperimentConfig& cfg, std::optional<int> rank,
                         std::ostream& out, std::ostream& log);

void run_experiment(const ExperimentConfig& cfg, std::optional<int> rank, std::ostream& out,
                    std::ostream& log);

void write_config_header(const ExperimentConfig& cfg, std::ostream& out);

}  // namespace sparsync
