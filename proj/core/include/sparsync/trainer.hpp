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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sparsync/codec.hpp"
#include "sparsync/collectives.hpp"
#include "sparsync/dataset.hpp"
#include "sparsync/mlp.hpp"
#include "sparsync/selection.hpp"

namespace sparsync {

struct WarmupSchedule {
  enum class Kind { kNone, kRatioSchedule, kDenseEpochs };
  Kind kind = Kind::kNone;
  std::vector<double> ratios;  // kRatioSchedule: one fraction per epoch
  std::size_t dense_epochs = 0;

  static WarmupSchedule none() { return {}; }
  static WarmupSchedule ratio_schedule(std::vector<double> r) {
    return {Kind::kRatioSchedule, std::move(r), 0};
  }
  static WarmupSchedule dense(std::size_t epochs) { return {Kind::kDenseEpochs, {}, epochs}; }
  // 25%, 6.25%, 1.5625%, 0.4%, 0.1%
  static WarmupSchedule exponential();

  std::string to_string() const;
};

struct TrainConfig {
  double ratio = 0.001;
  std::size_t batch_size = 32;
  double lr = 0.1;
  // lr is multiplied by lr_decay every lr_decay_epochs epochs (0 = constant).
  double lr_decay = 1.0;
  std::size_t lr_decay_epochs = 0;
  float momentum = 0.9f;
  std::optional<float> clip_norm;
  WarmupSchedule warmup;
  bool quantize = false;
  SelectorKind selector = SelectorKind::kTrimmed;
  SelectorConfig selector_cfg;
  // Tensors smaller than this are synchronised densely.
  std::size_t dense_floor = 512;
  // false: plain dense data-parallel momentum SGD (the baseline).
  bool compress = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct WarmupDecision {
  bool dense = false;
  double ratio = 0.0;
};

WarmupDecision warmup_ratio(std::size_t epoch, const TrainConfig& cfg);

double learning_rate(std::size_t epoch, const TrainConfig& cfg);

// Scale all tensors so their global norm is at most clip_norm / sqrt(N).
// Returns the factor applied (1 when below threshold).
float local_clip(TensorList& grads, float clip_norm, int world_size);

// Momentum correction: u = m u + g, then V = V + u.
void momentum_accumulate(DenseTensor& u, DenseTensor& V, const DenseTensor& g, float m);

// Momentum masking: zero u and V at the transmitted indices.
void apply_mask(DenseTensor& u, DenseTensor& V, std::span<const std::uint32_t> indices);

struct WorkerState {
  MlpModel model;
  TensorList residual;
  TensorList momentum;
  AsqPhase phase = AsqPhase::kPositive;
  std::vector<ThresholdCache> caches;
  std::uint64_t step = 0;
  std::uint64_t positive_phase_steps = 0;
  std::uint64_t negative_phase_steps = 0;
};

// Per-tensor record of one step, delivered to an optional trace sink.
struct LayerTrace {
  int rank = 0;
  std::uint64_t step = 0;
  std::size_t param = 0;
  bool compressed = false;
  bool quantized = false;
  DenseTensor residual_before;
  DenseTensor momentum_after;  // u after correction, before masking
  DenseTensor residual_after;
  SelectionResult selection;   // selected pre-quantization values
};

using TraceSink = std::function<void(const LayerTrace&)>;

struct LayerStepInfo {
  std::size_t param = 0;
  std::size_t elements = 0;
  bool compressed = false;
  bool quantized = false;
  std::size_t k = 0;
  std::size_t sent = 0;
  // Distinct indices across all ranks' gathered messages.
  std::size_t union_count = 0;
  std::vector<std::size_t> gathered_counts;
  std::size_t frame_bytes = 0;
  AsqPhase phase = AsqPhase::kPositive;
};

struct WorkerStepReport {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  bool dense = false;
  double effective_ratio = 0.0;
  double loss = 0.0;  // mean loss of the local batch before the update
  TransportStats traffic;
  std::vector<LayerStepInfo> layers;

  // Distinct gathered indices over all compressed elements; 1 when dense.
  double union_ratio() const;
};

// One rank of synchronous data-parallel training. Each step runs the
// per-tensor pipeline in reverse layer order: accumulate residual, select,
// optionally quantize, encode, allgather, decompress, SGD update, mask.
class Worker {
 public:
  Worker(const TrainConfig& cfg, std::shared_ptr<const Dataset> data, const MlpSpec& spec,
         std::unique_ptr<Transport> transport);

  WorkerStepReport step();

  const WorkerState& state() const noexcept { return state_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  Communicator& communicator() noexcept { return comm_; }
  int rank() const noexcept { return comm_.rank(); }
  std::size_t steps_per_epoch() const noexcept { return stream_.steps_per_epoch(); }

  void set_trace_sink(TraceSink sink) { trace_ = std::move(sink); }

 private:
  bool compressible(std::size_t param) const;
  void sync_dense(std::size_t param, const DenseTensor& grad, float lr_scale, bool momentum);
  void sync_sparse(std::size_t param, const DenseTensor& grad, double ratio, float lr_scale,
                   WorkerStepReport& report);

  TrainConfig cfg_;
  std::shared_ptr<const Dataset> data_;
  Communicator comm_;
  BatchStream stream_;
  WorkerState state_;
  TraceSink trace_;
};

struct ClusterStepReport {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  bool dense = false;
  std::vector<double> losses;
  double accuracy = 0.0;     // rank 0 model on the full dataset
  double full_loss = 0.0;    // rank 0 model on the full dataset
  double union_ratio = 1.0;
  std::uint64_t bytes_sent = 0;  // summed over ranks
  bool replicas_identical = true;
  std::vector<WorkerStepReport> workers;
};

// p workers on threads over the in-process transport.
class ThreadedCluster {
 public:
  ThreadedCluster(int world_size, const TrainConfig& cfg, std::shared_ptr<const Dataset> data,
                  const MlpSpec& spec,
                  std::chrono::milliseconds timeout = kDefaultTransportTimeout);

  // Throws DivergenceError on a non-finite loss, and rethrows the first
  // worker failure after shutting the fabric down.
  ClusterStepReport step();

  int size() const noexcept { return static_cast<int>(workers_.size()); }
  Worker& worker(int r) { return *workers_[static_cast<std::size_t>(r)]; }
  const Worker& worker(int r) const { return *workers_[static_cast<std::size_t>(r)]; }
  bool replicas_identical() const;

  void set_trace_sink(TraceSink sink);

 private:
  std::shared_ptr<const Dataset> data_;
  std::shared_ptr<InProcessFabric> fabric_;
  std::vector<std::unique_ptr<Worker>> workers_;
};

bool models_bitwise_equal(const MlpModel& a, const MlpModel& b);

}  // namespace sparsync
