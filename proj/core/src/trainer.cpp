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

#include "sparsync/trainer.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "sparsync/error.hpp"

namespace sparsync {

WarmupSchedule WarmupSchedule::exponential() {
  return ratio_schedule({0.25, 0.0625, 0.015625, 0.004, 0.001});
}

std::string WarmupSchedule::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kNone: os << "none"; break;
    case Kind::kDenseEpochs: os << "dense:" << dense_epochs; break;
    case Kind::kRatioSchedule:
      os << "schedule:";
      for (std::size_t i = 0; i < ratios.size(); ++i) os << (i ? "," : "") << ratios[i];
      break;
  }
  return os.str();
}

void TrainConfig::validate() const {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio must be in (0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("momentum must be in [0, 1)");
  if (clip_norm && !(*clip_norm > 0.0f)) throw ConfigError("clip_norm must be positive");
  if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be positive");
  for (double r : warmup.ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("warm-up ratios must be in (0, 1]");
  }
  if (selector == SelectorKind::kSampledBinarySearch && quantize) {
    throw ConfigError("sampled threshold search cannot be combined with quantization");
  }
  try {
    selector_cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

WarmupDecision warmup_ratio(std::size_t epoch, const TrainConfig& cfg) {
  switch (cfg.warmup.kind) {
    case WarmupSchedule::Kind::kRatioSchedule:
      if (epoch < cfg.warmup.ratios.size()) return {false, cfg.warmup.ratios[epoch]};
      break;
    case WarmupSchedule::Kind::kDenseEpochs:
      if (epoch < cfg.warmup.dense_epochs) return {true, 1.0};
      break;
    case WarmupSchedule::Kind::kNone:
      break;
  }
  return {false, cfg.ratio};
}

double learning_rate(std::size_t epoch, const TrainConfig& cfg) {
  if (cfg.lr_decay_epochs == 0) return cfg.lr;
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.lr_decay_epochs));
}

float local_clip(TensorList& grads, float clip_norm, int world_size) {
  const double threshold = clip_norm / std::sqrt(static_cast<double>(world_size));
  const double norm = global_l2_norm(grads);
  if (!(norm > threshold)) return 1.0f;
  const auto scale = static_cast<float>(threshold / norm);
  for (auto& g : grads)
    for (auto& v : g) v *= scale;
  return scale;
}

void momentum_accumulate(DenseTensor& u, DenseTensor& V, const DenseTensor& g, float m) {
  if (u.size() != g.size() || V.size() != g.size()) {
    throw ShapeError("momentum_accumulate: shape mismatch");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    u[i] = m * u[i] + g[i];
    V[i] = V[i] + u[i];
  }
}

void apply_mask(DenseTensor& u, DenseTensor& V, std::span<const std::uint32_t> indices) {
  for (auto i : indices) {
    if (i >= V.size() || i >= u.size()) throw InvalidArgument("apply_mask: index out of range");
    u[i] = 0.0f;
    V[i] = 0.0f;
  }
}

double WorkerStepReport::union_ratio() const {
  std::size_t distinct = 0;
  std::size_t total = 0;
  for (const auto& l : layers) {
    if (!l.compressed) continue;
    distinct += l.union_count;
    total += l.elements;
  }
  return total == 0 ? 1.0 : static_cast<double>(distinct) / static_cast<double>(total);
}

Worker::Worker(const TrainConfig& cfg, std::shared_ptr<const Dataset> data, const MlpSpec& spec,
               std::unique_ptr<Transport> transport)
    : cfg_(cfg),
      data_(std::move(data)),
      comm_(std::move(transport)),
      stream_(data_->rows, comm_.size(), comm_.rank(), cfg.batch_size, cfg.seed) {
  cfg_.validate();
  if (data_->dim != spec.sizes.front()) {
    throw ConfigError("dataset has " + std::to_string(data_->dim) +
                      " features but the model input is " + std::to_string(spec.sizes.front()));
  }
  // Every rank derives the same initial weights from the shared seed.
  Rng init = Rng(cfg.seed).fork(0x1417);
  state_.model = MlpModel::initialized(spec, init);
  for (const auto& p : state_.model.params()) {
    state_.residual.emplace_back(p.size());
    state_.momentum.emplace_back(p.size());
  }
  state_.caches.resize(state_.model.params().size());
}

bool Worker::compressible(std::size_t param) const {
  return cfg_.compress && state_.model.params()[param].size() >= cfg_.dense_floor;
}

void Worker::sync_dense(std::size_t param, const DenseTensor& grad, float lr_scale,
                        bool momentum) {
  const DenseTensor agg = allreduce_dense(comm_, grad);
  auto& u = state_.momentum[param];
  auto& w = state_.model.params()[param];
  if (momentum) {
    for (std::size_t i = 0; i < agg.size(); ++i) u[i] = cfg_.momentum * u[i] + agg[i];
    axpy_inplace(lr_scale, u.span(), w.span());
  } else {
    axpy_inplace(lr_scale, agg.span(), w.span());
  }
}

void Worker::sync_sparse(std::size_t param, const DenseTensor& grad, double ratio,
                         float lr_scale, WorkerStepReport& report) {
  auto& u = state_.momentum[param];
  auto& V = state_.residual[param];
  auto& w = state_.model.params()[param];
  const std::size_t M = w.size();

  LayerTrace trace;
  if (trace_) trace.residual_before = V;
  momentum_accumulate(u, V, grad, cfg_.momentum);
  if (trace_) trace.momentum_after = u;

  LayerStepInfo info;
  info.param = param;
  info.elements = M;
  info.compressed = true;
  info.k = top_k_count(ratio, M);
  info.quantized = cfg_.quantize && !state_.model.is_output_param(param);
  info.phase = state_.phase;

  SelectionResult sel =
      info.quantized
          ? asq_select(V.span(), info.k, state_.phase, cfg_.selector_cfg, cfg_.selector)
          : select(cfg_.selector, V.span(), info.k, cfg_.selector_cfg, &state_.caches[param]);
  const SparseMessage msg = info.quantized ? quantize_mean(sel) : dense_message(sel);
  info.sent = msg.count();
  info.frame_bytes = encoded_size(msg);

  const std::vector<SparseMessage> gathered = allgather_sparse(comm_, msg);
  DenseTensor agg(M);
  std::vector<std::uint8_t> seen(M, 0);
  for (const auto& m : gathered) {
    decompress_apply(agg, m, 1.0f);
    info.gathered_counts.push_back(m.count());
    for (auto i : m.indices) {
      info.union_count += seen[i] ? 0 : 1;
      seen[i] = 1;
    }
  }
  axpy_inplace(lr_scale, agg.span(), w.span());
  apply_mask(u, V, sel.indices);

  if (trace_) {
    trace.rank = comm_.rank();
    trace.step = state_.step;
    trace.param = param;
    trace.compressed = true;
    trace.quantized = info.quantized;
    trace.residual_after = V;
    trace.selection = std::move(sel);
    trace_(trace);
  }
  report.layers.push_back(std::move(info));
}

WorkerStepReport Worker::step() {
  WorkerStepReport report;
  report.step = state_.step;
  report.epoch = static_cast<std::size_t>(state_.step / stream_.steps_per_epoch());
  const WarmupDecision wd =
      cfg_.compress ? warmup_ratio(report.epoch, cfg_) : WarmupDecision{true, 1.0};
  report.dense = wd.dense;
  report.effective_ratio = wd.ratio;
  const double lr = learning_rate(report.epoch, cfg_);

  const auto rows = stream_.next();
  const Batch batch = data_->gather(rows);
  GradientResult gr = forward_backward(state_.model, batch);
  report.loss = gr.loss_sum / static_cast<double>(batch.rows);
  if (!std::isfinite(report.loss)) {
    throw DivergenceError("rank " + std::to_string(comm_.rank()) + " step " +
                          std::to_string(state_.step) + ": non-finite loss");
  }
  if (cfg_.clip_norm) local_clip(gr.grads, *cfg_.clip_norm, comm_.size());

  const auto lr_scale = static_cast<float>(
      -lr / (static_cast<double>(comm_.size()) * static_cast<double>(cfg_.batch_size)));
  const TransportStats before = comm_.stats();
  bool quantized_any = false;
  for (std::size_t j = state_.model.params().size(); j-- > 0;) {
    if (wd.dense || !compressible(j)) {
      sync_dense(j, gr.grads[j], lr_scale, true);
      LayerStepInfo info;
      info.param = j;
      info.elements = gr.grads[j].size();
      report.layers.push_back(std::move(info));
    } else {
      sync_sparse(j, gr.grads[j], wd.ratio, lr_scale, report);
      quantized_any |= report.layers.back().quantized;
    }
  }
  if (quantized_any) {
    (state_.phase == AsqPhase::kPositive ? state_.positive_phase_steps
                                         : state_.negative_phase_steps) += 1;
  }
  if (cfg_.quantize) state_.phase = flip(state_.phase);
  report.traffic = comm_.stats() - before;
  ++state_.step;
  return report;
}

bool models_bitwise_equal(const MlpModel& a, const MlpModel& b) {
  if (a.params().size() != b.params().size()) return false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    if (!bitwise_equal(a.params()[i].span(), b.params()[i].span())) return false;
  }
  return true;
}

ThreadedCluster::ThreadedCluster(int world_size, const TrainConfig& cfg,
                                 std::shared_ptr<const Dataset> data, const MlpSpec& spec,
                                 std::chrono::milliseconds timeout)
    : data_(std::move(data)), fabric_(InProcessFabric::create(world_size, timeout)) {
  for (int r = 0; r < world_size; ++r) {
    workers_.push_back(std::make_unique<Worker>(cfg, data_, spec, fabric_->endpoint(r)));
  }
}

void ThreadedCluster::set_trace_sink(TraceSink sink) {
  for (auto& w : workers_) w->set_trace_sink(sink);
}

bool ThreadedCluster::replicas_identical() const {
  for (std::size_t r = 1; r < workers_.size(); ++r) {
    if (!models_bitwise_equal(workers_[0]->state().model, workers_[r]->state().model)) return false;
  }
  return true;
}

ClusterStepReport ThreadedCluster::step() {
  const std::size_t p = workers_.size();
  std::vector<WorkerStepReport> reports(p);
  std::mutex mu;
  std::exception_ptr first_error;
  {
    std::vector<std::jthread> threads;
    threads.reserve(p);
    for (std::size_t r = 0; r < p; ++r) {
      threads.emplace_back([&, r] {
        try {
          reports[r] = workers_[r]->step();
        } catch (...) {
          {
            std::lock_guard lock(mu);
            if (!first_error) first_error = std::current_exception();
          }
          fabric_->shutdown();
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  ClusterStepReport out;
  out.step = reports[0].step;
  out.epoch = reports[0].epoch;
  out.dense = reports[0].dense;
  out.union_ratio = reports[0].union_ratio();
  for (const auto& r : reports) {
    out.losses.push_back(r.loss);
    out.bytes_sent += r.traffic.bytes_sent;
  }
  out.replicas_identical = replicas_identical();
  const Evaluation e = evaluate(workers_[0]->state().model, data_->all());
  out.accuracy = e.accuracy;
  out.full_loss = e.mean_loss;
  out.workers = std::move(reports);
  return out;
}

}  // namespace sparsync
