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
#include <string>
#include <vector>

#include "sparsync/collectives.hpp"

namespace sparsync::cost {

// Inputs of the latency/bandwidth model for one layer.
//   alpha    seconds per message
//   beta     seconds per unit (element or byte, see Unit)
//   gamma1   seconds to decompress one gathered size-M message
//   gamma2   seconds to reduce one size-M message
//   p        ranks (power of two)
//   M        elements in the layer
//   D        per-rank compression ratio
//   t_select seconds spent selecting the communication-set
struct CostParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  std::uint64_t p = 1;
  double M = 0.0;
  double D = 1.0;
  double t_select = 0.0;

  void validate() const;
};

// kElements is the literal model: the bandwidth term counts elements.
// kBytes charges real frame bytes: 8 per sparse element (index + value),
// 4 per element plus one mean for quantized frames, 4 per dense element.
enum class Unit { kElements, kBytes };

double lg(std::uint64_t p);

// T_select + lg(p) a + (p-1) M D b + p g1
double t_sparse(const CostParams& c, Unit unit = Unit::kElements, bool quantized = false);

// 2 lg(p) a + 2 (p-1)/p M b + (p-1)/p g2
double t_dense(const CostParams& c, Unit unit = Unit::kElements);

// Sparse bandwidth term over the dense-equivalent M b; equals (p-1) D.
double bandwidth_ratio(std::uint64_t p, double D);

// Largest power-of-two p in [2, max_p] where t_sparse < t_dense.
std::optional<std::uint64_t> crossover_p(CostParams c, Unit unit = Unit::kElements,
                                         bool quantized = false,
                                         std::uint64_t max_p = std::uint64_t{1} << 16);

struct SweepRow {
  std::uint64_t p;
  double D;
  double t_sparse;
  double t_dense;
  double speedup;
  double bandwidth_ratio;
};

std::vector<SweepRow> sweep(const CostParams& base, const std::vector<std::uint64_t>& ps,
                            const std::vector<double>& ds, Unit unit, bool quantized);

enum class CollectiveKind { kSparseAllgather, kDenseAllreduce };

struct Reconciliation {
  CollectiveKind kind;
  std::uint64_t measured_steps;
  double predicted_steps;
  std::uint64_t measured_bytes;
  double predicted_bytes;
  double steps_deviation_pct;
  double bytes_deviation_pct;

  std::string to_string() const;
};

// Compare one rank's measured stats for a single collective against the
// model. For the sparse allgather, frame_bytes is the (mean) encoded frame
// size; for the dense allreduce, params.M elements of 4 bytes are assumed.
Reconciliation reconcile(const TransportStats& stats, const CostParams& params,
                         CollectiveKind kind, double frame_bytes = 0.0);

}  // namespace sparsync::cost
