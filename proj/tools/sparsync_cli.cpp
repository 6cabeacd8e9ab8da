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

// Experiment runner: train, cost-sweep, selection-bench, collective-test.
//
// Exit codes: 0 ok, 2 configuration error, 3 runtime error.

#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sparsync/config.hpp"
#include "sparsync/error.hpp"
#include "sparsync/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Re-executes this binary once per rank and waits for all of them.
int spawn_local(const sparsync::ExperimentConfig& cfg, const std::vector<std::string>& forwarded,
                const std::string& out_path) {
  std::vector<pid_t> children;
  for (int r = 0; r < cfg.topology.workers; ++r) {
    std::vector<std::string> args{"/proc/self/exe"};
    args.insert(args.end(), forwarded.begin(), forwarded.end());
    args.push_back("--rank");
    args.push_back(std::to_string(r));
    if (!out_path.empty()) {
      args.push_back("--out");
      args.push_back(out_path);
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      std::cerr << "fork failed\n";
      return kExitRuntime;
    }
    if (pid == 0) {
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv("/proc/self/exe", argv.data());
      std::_Exit(kExitRuntime);
    }
    children.push_back(pid);
  }
  int worst = kExitOk;
  for (pid_t pid : children) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitRuntime;
    worst = std::max(worst, code);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual gradient compression experiments"};
  std::string mode;
  std::string config_path;
  std::optional<int> rank;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::vector<std::string> overrides;
  bool spawn = false;

  app.add_option("--mode", mode, "train | cost-sweep | selection-bench | collective-test");
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--rank", rank, "this process's rank (sockets topology)");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--out", out_path, "CSV output path (default: stdout)");
  app.add_option("--set", overrides, "extra key=value setting, applied after --config");
  app.add_flag("--spawn-local", spawn, "launch every rank of a sockets topology on this machine");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  sparsync::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = sparsync::load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw sparsync::ConfigError("--set expects key=value, got '" + kv + "'");
      sparsync::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!mode.empty()) sparsync::apply_setting(cfg, "mode", mode);
    if (seed) sparsync::apply_setting(cfg, "seed", std::to_string(*seed));
    if (!out_path.empty()) cfg.output = out_path;
    cfg.validate();
    if (rank && (*rank < 0 || *rank >= cfg.topology.workers)) {
      throw sparsync::ConfigError("--rank outside [0, workers)");
    }
  } catch (const sparsync::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (spawn) {
    if (cfg.topology.kind != sparsync::Topology::Kind::kSockets) {
      std::cerr << "config error: --spawn-local needs topology = sockets\n";
      return kExitConfig;
    }
    std::vector<std::string> forwarded;
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--spawn-local") continue;
      if (a == "--out" || a == "--rank") {
        ++i;
        continue;
      }
      if (a.rfind("--out=", 0) == 0 || a.rfind("--rank=", 0) == 0) continue;
      forwarded.push_back(a);
    }
    return spawn_local(cfg, forwarded, cfg.output);
  }

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!cfg.output.empty() && (!rank || *rank == 0 || cfg.mode == sparsync::Mode::kCollectiveTest)) {
    std::string path = cfg.output;
    if (rank && *rank != 0) path += ".rank" + std::to_string(*rank);
    file.open(path);
    if (!file) {
      std::cerr << "config error: cannot open " << path << '\n';
      return kExitConfig;
    }
    out = &file;
  }

  try {
    sparsync::run_experiment(cfg, rank, *out, std::cerr);
  } catch (const sparsync::ConfigError& e) {
    out->flush();
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    out->flush();
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
