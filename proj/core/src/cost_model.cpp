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

#include "sparsync/cost_model.hpp"

#include <cmath>
#include <sstream>

#include "sparsync/error.hpp"

namespace sparsync::cost {

namespace {

double deviation_pct(double measured, double predicted) {
  if (predicted == 0.0) return measured == 0.0 ? 0.0 : 100.0;
  return std::fabs(measured - predicted) / predicted * 100.0;
}

}  // namespace

void CostParams::validate() const {
  if (alpha < 0 || beta < 0 || gamma1 < 0 || gamma2 < 0 || M < 0 || t_select < 0) {
    throw InvalidArgument("cost params must be non-negative");
  }
  if (!is_power_of_two(p)) throw InvalidArgument("cost params: p must be a power of two");
  if (!(D > 0.0 && D <= 1.0)) throw InvalidArgument("cost params: D must be in (0, 1]");
}

double lg(std::uint64_t p) { return std::log2(static_cast<double>(p)); }

double t_sparse(const CostParams& c, Unit unit, bool quantized) {
  const double p = static_cast<double>(c.p);
  double per_frame = c.M * c.D;
  if (unit == Unit::kBytes) {
    per_frame = quantized ? 4.0 * c.M * c.D + 4.0 : 8.0 * c.M * c.D;
  }
  return c.t_select + lg(c.p) * c.alpha + (p - 1.0) * per_frame * c.beta + p * c.gamma1;
}

double t_dense(const CostParams& c, Unit unit) {
  const double p = static_cast<double>(c.p);
  const double volume = unit == Unit::kBytes ? 4.0 * c.M : c.M;
  const double frac = (p - 1.0) / p;
  return 2.0 * lg(c.p) * c.alpha + 2.0 * frac * volume * c.beta + frac * c.gamma2;
}

double bandwidth_ratio(std::uint64_t p, double D) { return static_cast<double>(p - 1) * D; }

std::optional<std::uint64_t> crossover_p(CostParams c, Unit unit, bool quantized,
                                         std::uint64_t max_p) {
  std::optional<std::uint64_t> best;
  for (std::uint64_t p = 2; p <= max_p; p <<= 1) {
    c.p = p;
    if (t_sparse(c, unit, quantized) < t_dense(c, unit)) best = p;
  }
  return best;
}

std::vector<SweepRow> sweep(const CostParams& base, const std::vector<std::uint64_t>& ps,
                            const std::vector<double>& ds, Unit unit, bool quantized) {
  std::vector<SweepRow> rows;
  for (double d : ds) {
    for (auto p : ps) {
      CostParams c = base;
      c.p = p;
      c.D = d;
      c.validate();
      SweepRow row;
      row.p = p;
      row.D = d;
      row.t_sparse = t_sparse(c, unit, quantized);
      row.t_dense = t_dense(c, unit);
      row.speedup = row.t_sparse > 0 ? row.t_dense / row.t_sparse : 0.0;
      row.bandwidth_ratio = bandwidth_ratio(p, d);
      rows.push_back(row);
    }
  }
  return rows;
}

Reconciliation reconcile(const TransportStats& stats, const CostParams& params,
                         CollectiveKind kind, double frame_bytes) {
  Reconciliation r;
  r.kind = kind;
  r.measured_steps = stats.steps;
  r.measured_bytes = stats.bytes_sent;
  const double p = static_cast<double>(params.p);
  if (kind == CollectiveKind::kSparseAllgather) {
    r.predicted_steps = lg(params.p);
    r.predicted_bytes = (p - 1.0) * frame_bytes;
  } else {
    r.predicted_steps = 2.0 * lg(params.p);
    r.predicted_bytes = 2.0 * (p - 1.0) / p * 4.0 * params.M;
  }
  r.steps_deviation_pct = deviation_pct(static_cast<double>(r.measured_steps), r.predicted_steps);
  r.bytes_deviation_pct = deviation_pct(static_cast<double>(r.measured_bytes), r.predicted_bytes);
  return r;
}

std::string Reconciliation::to_string() const {
  std::ostringstream os;
  os << (kind == CollectiveKind::kSparseAllgather ? "sparse_allgather" : "dense_allreduce")
     << " steps " << measured_steps << " (model " << predicted_steps << ", "
     << steps_deviation_pct << "%) bytes " << measured_bytes << " (model " << predicted_bytes
     << ", " << bytes_deviation_pct << "%)";
  return os.str();
}

}  // namespace sparsync::cost
