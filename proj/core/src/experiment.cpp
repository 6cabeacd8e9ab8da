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

#include "sparsync/experiment.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>
#include <thread>

#include "sparsync/collectives.hpp"
#include "sparsync/cost_model.hpp"
#include "sparsync/dataset.hpp"
#include "sparsync/error.hpp"
#include "sparsync/selection.hpp"
#include "sparsync/trainer.hpp"

namespace sparsync {

namespace {

constexpr std::uint64_t kDataStream = 0xda7a;

std::shared_ptr<const Dataset> build_dataset(const ExperimentConfig& cfg) {
  if (!cfg.data.csv_path.empty()) {
    auto d = std::make_shared<Dataset>(load_csv(cfg.data.csv_path));
    if (d->dim != cfg.model.sizes.front()) {
      throw ConfigError("dataset has " + std::to_string(d->dim) +
                        " features but model_sizes starts with " +
                        std::to_string(cfg.model.sizes.front()));
    }
    if (static_cast<std::size_t>(d->classes) > cfg.model.sizes.back()) {
      throw ConfigError("dataset has more classes than model outputs");
    }
    return d;
  }
  return std::make_shared<Dataset>(make_blobs(cfg.data.blobs, Rng(cfg.seed).fork(kDataStream).seed()));
}

std::uint64_t weights_hash(const MlpModel& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : m.params()) {
    for (float v : t) {
      h ^= std::bit_cast<std::uint32_t>(v);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void write_train_header(std::ostream& out, int p) {
  out << "step,epoch,dense";
  for (int r = 0; r < p; ++r) out << ",loss_" << r;
  out << ",mean_loss,accuracy,full_loss,union_ratio,bytes_sent,replicas_identical\n";
}

struct Row {
  std::uint64_t step;
  std::size_t epoch;
  bool dense;
  std::vector<double> losses;
  double accuracy;
  double full_loss;
  double union_ratio;
  std::uint64_t bytes;
  bool identical;
};

void write_row(std::ostream& out, const Row& r) {
  double mean = 0.0;
  for (double l : r.losses) mean += l;
  mean /= static_cast<double>(r.losses.size());
  out << r.step << ',' << r.epoch << ',' << (r.dense ? 1 : 0);
  for (double l : r.losses) out << ',' << l;
  out << ',' << mean << ',' << r.accuracy << ',' << r.full_loss << ',' << r.union_ratio << ','
      << r.bytes << ',' << (r.identical ? 1 : 0) << '\n';
}

void write_summary(std::ostream& out, std::ostream& log, const Row& last, std::uint64_t total_bytes,
                   double mean_union) {
  out << "# summary accuracy=" << last.accuracy << " loss=" << last.full_loss
      << " bytes=" << total_bytes << " mean_union_ratio=" << mean_union << '\n';
  log << "final: accuracy " << last.accuracy << ", loss " << last.full_loss << ", bytes "
      << total_bytes << ", mean union ratio " << mean_union << '\n';
}

}  // namespace

void write_config_header(const ExperimentConfig& cfg, std::ostream& out) {
  for (const auto& [k, v] : cfg.resolved()) out << "# " << k << " = " << v << '\n';
}

void run_train(const ExperimentConfig& cfg, std::optional<int> rank, std::ostream& out,
               std::ostream& log) {
  const auto data = build_dataset(cfg);
  const int p = cfg.topology.workers;
  out << std::setprecision(9);

  Row last{};
  std::uint64_t total_bytes = 0;
  double union_sum = 0.0;
  std::size_t union_steps = 0;

  if (cfg.topology.kind == Topology::Kind::kThreads) {
    ThreadedCluster cluster(p, cfg.train, data, cfg.model, cfg.topology.timeout);
    write_config_header(cfg, out);
    write_train_header(out, p);
    for (std::size_t s = 0; s < cfg.steps; ++s) {
      ClusterStepReport rep;
      try {
        rep = cluster.step();
      } catch (...) {
        out.flush();
        throw;
      }
      last = Row{rep.step, rep.epoch, rep.dense, rep.losses, rep.accuracy,
                 rep.full_loss, rep.union_ratio, rep.bytes_sent, rep.replicas_identical};
      write_row(out, last);
      total_bytes += rep.bytes_sent;
      if (!rep.dense) {
        union_sum += rep.union_ratio;
        ++union_steps;
      }
      if (!rep.replicas_identical) {
        out.flush();
        throw Error("replica weights diverged at step " + std::to_string(rep.step));
      }
    }
  } else {
    if (!rank) throw ConfigError("sockets topology needs --rank");
    Worker worker(cfg.train, data, cfg.model,
                  connect_socket_transport(*rank, cfg.topology.hosts, cfg.topology.timeout));
    const bool writer = *rank == 0;
    if (writer) {
      write_config_header(cfg, out);
      write_train_header(out, p);
    }
    for (std::size_t s = 0; s < cfg.steps; ++s) {
      WorkerStepReport rep;
      try {
        rep = worker.step();
      } catch (...) {
        out.flush();
        worker.communicator().transport().abort();
        throw;
      }
      // Side channel: per-rank loss, traffic and a 64-bit weight hash split
      // into 16-bit chunks so a float sum reproduces them exactly.
      const std::size_t slot = 6;
      DenseTensor side(static_cast<std::size_t>(p) * slot);
      const std::size_t base = static_cast<std::size_t>(*rank) * slot;
      const std::uint64_t h = weights_hash(worker.state().model);
      side[base] = static_cast<float>(rep.loss);
      side[base + 1] = static_cast<float>(rep.traffic.bytes_sent);
      for (int c = 0; c < 4; ++c) side[base + 2 + static_cast<std::size_t>(c)] = static_cast<float>((h >> (16 * c)) & 0xffffu);
      const DenseTensor all = allreduce_dense(worker.communicator(), side);

      Row row{rep.step, rep.epoch, rep.dense, {}, 0.0, 0.0, rep.union_ratio(), 0, true};
      for (int r = 0; r < p; ++r) {
        const std::size_t b = static_cast<std::size_t>(r) * slot;
        row.losses.push_back(all[b]);
        row.bytes += static_cast<std::uint64_t>(all[b + 1]);
        for (int c = 0; c < 4; ++c) {
          const std::size_t at = 2 + static_cast<std::size_t>(c);
          row.identical = row.identical && all[b + at] == all[at];
        }
      }
      if (writer) {
        const Evaluation e = evaluate(worker.state().model, data->all());
        row.accuracy = e.accuracy;
        row.full_loss = e.mean_loss;
        write_row(out, row);
      }
      last = row;
      total_bytes += row.bytes;
      if (!row.dense) {
        union_sum += row.union_ratio;
        ++union_steps;
      }
      if (!row.identical) {
        out.flush();
        throw Error("replica weights diverged at step " + std::to_string(row.step));
      }
    }
    if (!writer) {
      log << "rank " << *rank << " done\n";
      return;
    }
  }
  write_summary(out, log, last, total_bytes,
                union_steps ? union_sum / static_cast<double>(union_steps) : 1.0);
  out.flush();
}

void run_cost_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  write_config_header(cfg, out);
  out << std::setprecision(12);
  out << "p,D,t_sparse,t_dense,speedup,bandwidth_ratio\n";
  const auto rows = cost::sweep(cfg.cost, cfg.sweep_p, cfg.sweep_D, cfg.cost_unit, false);
  for (const auto& r : rows) {
    out << r.p << ',' << r.D << ',' << r.t_sparse << ',' << r.t_dense << ',' << r.speedup << ','
        << r.bandwidth_ratio << '\n';
  }
  for (double d : cfg.sweep_D) {
    cost::CostParams c = cfg.cost;
    c.D = d;
    const auto x = cost::crossover_p(c, cfg.cost_unit);
    out << "# crossover D=" << d << " p=" << (x ? std::to_string(*x) : std::string("none"))
        << '\n';
  }
}

void run_selection_bench(const ExperimentConfig& cfg, std::ostream& out) {
  using Clock = std::chrono::steady_clock;
  write_config_header(cfg, out);
  out << "size,selector,k,mean_seconds,mean_count\n";
  Rng rng(cfg.seed);
  for (std::size_t n : cfg.bench_sizes) {
    std::vector<float> x(n);
    for (auto& v : x) v = static_cast<float>(rng.uniform());
    const std::size_t k = top_k_count(cfg.train.ratio, n);
    for (auto kind : {SelectorKind::kExact, SelectorKind::kTrimmed,
                      SelectorKind::kThresholdBinarySearch, SelectorKind::kSampledBinarySearch}) {
      ThresholdCache cache;
      double seconds = 0.0;
      double count = 0.0;
      for (int rep = 0; rep < cfg.bench_repeats; ++rep) {
        const auto t0 = Clock::now();
        const SelectionResult r = select(kind, x, k, cfg.train.selector_cfg, &cache);
        seconds += std::chrono::duration<double>(Clock::now() - t0).count();
        count += static_cast<double>(r.size());
      }
      out << n << ',' << to_string(kind) << ',' << k << ',' << seconds / cfg.bench_repeats << ','
          << count / cfg.bench_repeats << '\n';
    }
  }
}

namespace {

SparseMessage collective_input(std::uint64_t seed, int rank, std::size_t elements) {
  Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(rank) + 1);
  std::vector<float> x(elements);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  const std::size_t k = 1 + rng.below(std::max<std::size_t>(1, elements / 100));
  return dense_message(exact_top_k(x, std::min(k, elements)));
}

DenseTensor dense_input(std::uint64_t seed, int rank, std::size_t elements) {
  Rng rng = Rng(seed).fork(0x10000 + static_cast<std::uint64_t>(rank));
  DenseTensor x(elements);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  return x;
}

void collective_rows(Communicator& comm, const ExperimentConfig& cfg, std::ostream& out) {
  const int p = comm.size();
  const int r = comm.rank();
  const std::size_t M = cfg.collective_elements;

  comm.reset_stats();
  const auto gathered = allgather_sparse(comm, collective_input(cfg.seed, r, M));
  const TransportStats ag = comm.stats();
  bool agree = gathered.size() == static_cast<std::size_t>(p);
  std::uint64_t expected_bytes = 0;
  for (int q = 0; q < p && agree; ++q) {
    const SparseMessage want = collective_input(cfg.seed, q, M);
    agree = gathered[static_cast<std::size_t>(q)] == want;
    if (q != r) expected_bytes += encoded_size(want);
  }
  out << "allgather_sparse," << p << ',' << r << ',' << ag.steps << ',' << log2_exact(static_cast<std::uint64_t>(p))
      << ',' << ag.bytes_sent << ',' << expected_bytes << ',' << (agree ? 1 : 0) << ",0\n";

  comm.reset_stats();
  const DenseTensor sum = allreduce_dense(comm, dense_input(cfg.seed, r, M));
  const TransportStats ar = comm.stats();
  std::vector<double> oracle(M, 0.0);
  for (int q = 0; q < p; ++q) {
    const DenseTensor x = dense_input(cfg.seed, q, M);
    for (std::size_t i = 0; i < M; ++i) oracle[i] += x[i];
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    num += (sum[i] - oracle[i]) * (sum[i] - oracle[i]);
    den += oracle[i] * oracle[i];
  }
  const double rel = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  const double predicted = 2.0 * (p - 1) / p * 4.0 * static_cast<double>(M);
  out << "allreduce_dense," << p << ',' << r << ',' << ar.steps << ','
      << 2 * log2_exact(static_cast<std::uint64_t>(p)) << ',' << ar.bytes_sent << ','
      << predicted << ',' << (rel <= 1e-5 ? 1 : 0) << ',' << rel << '\n';
}

}  // namespace

void run_collective_test(const ExperimentConfig& cfg, std::optional<int> rank, std::ostream& out,
                         std::ostream& log) {
  write_config_header(cfg, out);
  out << std::setprecision(9);
  out << "collective,p,rank,steps,expected_steps,bytes_sent,predicted_bytes,ok,rel_error\n";
  const int p = cfg.topology.workers;
  if (cfg.topology.kind == Topology::Kind::kSockets) {
    if (!rank) throw ConfigError("sockets topology needs --rank");
    Communicator comm(connect_socket_transport(*rank, cfg.topology.hosts, cfg.topology.timeout));
    collective_rows(comm, cfg, out);
    return;
  }
  auto fabric = InProcessFabric::create(p, cfg.topology.timeout);
  std::vector<std::ostringstream> rows(static_cast<std::size_t>(p));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));
  {
    std::vector<std::jthread> threads;
    for (int r = 0; r < p; ++r) {
      threads.emplace_back([&, r] {
        try {
          Communicator comm(fabric->endpoint(r));
          rows[static_cast<std::size_t>(r)] << std::setprecision(9);
          collective_rows(comm, cfg, rows[static_cast<std::size_t>(r)]);
        } catch (...) {
          errors[static_cast<std::size_t>(r)] = std::current_exception();
          fabric->shutdown();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& r : rows) out << r.str();
  log << "collective-test: " << p << " ranks done\n";
}

void run_experiment(const ExperimentConfig& cfg, std::optional<int> rank, std::ostream& out,
                    std::ostream& log) {
  cfg.validate();
  switch (cfg.mode) {
    case Mode::kTrain: run_train(cfg, rank, out, log); return;
    case Mode::kCostSweep: run_cost_sweep(cfg, out); return;
    case Mode::kSelectionBench: run_selection_bench(cfg, out); return;
    case Mode::kCollectiveTest: run_collective_test(cfg, rank, out, log); return;
  }
}

}  // namespace sparsync
