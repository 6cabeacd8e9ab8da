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

#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include "sparsync/collectives.hpp"
#include "sparsync/error.hpp"

namespace sparsync {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  // istream wraps "-4" into a huge unsigned value instead of failing.
  const bool negative_unsigned = std::is_unsigned_v<T> && value.find('-') != std::string::npos;
  if (in.fail() || !in.eof() || negative_unsigned) throw ConfigError("bad value for '" + key + "': '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("bad boolean for '" + key + "': '" + value + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  for (const auto& item : split(value, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

template <typename T>
std::string num(T v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

WarmupSchedule parse_warmup(const std::string& value) {
  if (value == "none") return WarmupSchedule::none();
  if (value == "exponential") return WarmupSchedule::exponential();
  if (value.rfind("schedule:", 0) == 0) {
    return WarmupSchedule::ratio_schedule(parse_list<double>("warmup", value.substr(9)));
  }
  if (value.rfind("dense:", 0) == 0) {
    return WarmupSchedule::dense(parse_number<std::size_t>("warmup", value.substr(6)));
  }
  throw ConfigError("bad value for 'warmup': '" + value +
                    "' (none | exponential | schedule:r0,r1,... | dense:N)");
}

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kTrain: return "train";
    case Mode::kCostSweep: return "cost-sweep";
    case Mode::kSelectionBench: return "selection-bench";
    case Mode::kCollectiveTest: return "collective-test";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
  for (auto m : {Mode::kTrain, Mode::kCostSweep, Mode::kSelectionBench, Mode::kCollectiveTest}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"mode",
       [](ExperimentConfig& c, const std::string& v) {
         auto m = parse_mode(v);
         if (!m) throw ConfigError("unknown mode '" + v + "'");
         c.mode = *m;
       }},
      {"seed",
       [](ExperimentConfig& c, const std::string& v) {
         c.seed = parse_number<std::uint64_t>("seed", v);
         c.train.seed = c.seed;
       }},
      {"steps", [](auto& c, auto& v) { c.steps = parse_number<std::size_t>("steps", v); }},
      {"output", [](auto& c, auto& v) { c.output = v; }},
      {"workers", [](auto& c, auto& v) { c.topology.workers = parse_number<int>("workers", v); }},
      {"topology",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "threads") {
           c.topology.kind = Topology::Kind::kThreads;
         } else if (v == "sockets") {
           c.topology.kind = Topology::Kind::kSockets;
         } else {
           throw ConfigError("unknown topology '" + v + "' (threads | sockets)");
         }
       }},
      {"hosts",
       [](ExperimentConfig& c, const std::string& v) {
         c.topology.hosts = parse_host_list(v);
         if (!c.topology.hosts.empty()) c.topology.workers = static_cast<int>(c.topology.hosts.size());
       }},
      {"timeout_ms",
       [](auto& c, auto& v) {
         c.topology.timeout = std::chrono::milliseconds(parse_number<long>("timeout_ms", v));
       }},
      {"selector",
       [](ExperimentConfig& c, const std::string& v) {
         auto k = parse_selector_kind(v);
         if (!k) throw ConfigError("unknown selector '" + v + "'");
         c.train.selector = *k;
       }},
      {"quantize", [](auto& c, auto& v) { c.train.quantize = parse_bool("quantize", v); }},
      {"compress", [](auto& c, auto& v) { c.train.compress = parse_bool("compress", v); }},
      {"ratio",
       [](auto& c, auto& v) {
         c.train.ratio = parse_number<double>("ratio", v);
         c.train.selector_cfg.ratio = c.train.ratio;
       }},
      {"batch_size",
       [](auto& c, auto& v) { c.train.batch_size = parse_number<std::size_t>("batch_size", v); }},
      {"lr", [](auto& c, auto& v) { c.train.lr = parse_number<double>("lr", v); }},
      {"lr_decay", [](auto& c, auto& v) { c.train.lr_decay = parse_number<double>("lr_decay", v); }},
      {"lr_decay_epochs",
       [](auto& c, auto& v) {
         c.train.lr_decay_epochs = parse_number<std::size_t>("lr_decay_epochs", v);
       }},
      {"momentum", [](auto& c, auto& v) { c.train.momentum = parse_number<float>("momentum", v); }},
      {"clip_norm",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "none") {
           c.train.clip_norm.reset();
         } else {
           c.train.clip_norm = parse_number<float>("clip_norm", v);
         }
       }},
      {"warmup", [](auto& c, auto& v) { c.train.warmup = parse_warmup(v); }},
      {"epsilon_trim",
       [](auto& c, auto& v) { c.train.selector_cfg.epsilon_trim = parse_number<float>("epsilon_trim", v); }},
      {"epsilon_bs",
       [](auto& c, auto& v) { c.train.selector_cfg.epsilon_bs = parse_number<float>("epsilon_bs", v); }},
      {"sample_interval",
       [](auto& c, auto& v) {
         c.train.selector_cfg.sample_interval = parse_number<int>("sample_interval", v);
       }},
      {"dense_floor",
       [](auto& c, auto& v) { c.train.dense_floor = parse_number<std::size_t>("dense_floor", v); }},
      {"model_sizes",
       [](auto& c, auto& v) { c.model.sizes = parse_list<std::size_t>("model_sizes", v); }},
      {"activation",
       [](ExperimentConfig& c, const std::string& v) {
         auto a = parse_activation(v);
         if (!a) throw ConfigError("unknown activation '" + v + "'");
         c.model.hidden = *a;
       }},
      {"loss",
       [](ExperimentConfig& c, const std::string& v) {
         auto l = parse_loss(v);
         if (!l) throw ConfigError("unknown loss '" + v + "'");
         c.model.loss = *l;
       }},
      {"dataset",
       [](ExperimentConfig& c, const std::string& v) { c.data.csv_path = v == "blobs" ? "" : v; }},
      {"samples",
       [](auto& c, auto& v) { c.data.blobs.samples = parse_number<std::size_t>("samples", v); }},
      {"dim", [](auto& c, auto& v) { c.data.blobs.dim = parse_number<std::size_t>("dim", v); }},
      {"classes", [](auto& c, auto& v) { c.data.blobs.classes = parse_number<int>("classes", v); }},
      {"separation",
       [](auto& c, auto& v) { c.data.blobs.separation = parse_number<double>("separation", v); }},
      {"noise", [](auto& c, auto& v) { c.data.blobs.noise = parse_number<double>("noise", v); }},
      {"alpha", [](auto& c, auto& v) { c.cost.alpha = parse_number<double>("alpha", v); }},
      {"beta", [](auto& c, auto& v) { c.cost.beta = parse_number<double>("beta", v); }},
      {"gamma1", [](auto& c, auto& v) { c.cost.gamma1 = parse_number<double>("gamma1", v); }},
      {"gamma2", [](auto& c, auto& v) { c.cost.gamma2 = parse_number<double>("gamma2", v); }},
      {"elements", [](auto& c, auto& v) { c.cost.M = parse_number<double>("elements", v); }},
      {"t_select", [](auto& c, auto& v) { c.cost.t_select = parse_number<double>("t_select", v); }},
      {"sweep_p", [](auto& c, auto& v) { c.sweep_p = parse_list<std::uint64_t>("sweep_p", v); }},
      {"sweep_D", [](auto& c, auto& v) { c.sweep_D = parse_list<double>("sweep_D", v); }},
      {"cost_unit",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "elements") {
           c.cost_unit = cost::Unit::kElements;
         } else if (v == "bytes") {
           c.cost_unit = cost::Unit::kBytes;
         } else {
           throw ConfigError("unknown cost_unit '" + v + "' (elements | bytes)");
         }
       }},
      {"bench_sizes",
       [](auto& c, auto& v) { c.bench_sizes = parse_list<std::size_t>("bench_sizes", v); }},
      {"bench_repeats",
       [](auto& c, auto& v) { c.bench_repeats = parse_number<int>("bench_repeats", v); }},
      {"collective_elements",
       [](auto& c, auto& v) {
         c.collective_elements = parse_number<std::size_t>("collective_elements", v);
       }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second(cfg, value);
}

void ExperimentConfig::validate() const {
  const int p = topology.workers;
  if (p < 1 || !is_power_of_two(static_cast<std::uint64_t>(p))) {
    throw ConfigError("workers must be a power of two, got " + std::to_string(p));
  }
  if (topology.kind == Topology::Kind::kSockets &&
      static_cast<int>(topology.hosts.size()) != p) {
    throw ConfigError("sockets topology needs one host:port per worker");
  }
  if (topology.timeout.count() <= 0) throw ConfigError("timeout_ms must be positive");
  train.validate();
  if (model.sizes.size() < 2) throw ConfigError("model_sizes needs at least two entries");
  if (data.csv_path.empty()) {
    if (data.blobs.dim != model.sizes.front()) {
      throw ConfigError("dim (" + std::to_string(data.blobs.dim) +
                        ") must equal the model input width (" +
                        std::to_string(model.sizes.front()) + ")");
    }
    if (static_cast<std::size_t>(data.blobs.classes) != model.sizes.back()) {
      throw ConfigError("classes must equal the model output width");
    }
    if (data.blobs.samples < static_cast<std::size_t>(p) * train.batch_size) {
      throw ConfigError("samples must hold at least one global batch");
    }
  }
  if (mode == Mode::kCostSweep) {
    for (auto q : sweep_p) {
      if (!is_power_of_two(q)) throw ConfigError("sweep_p entries must be powers of two");
    }
    for (double d : sweep_D) {
      if (!(d > 0.0 && d <= 1.0)) throw ConfigError("sweep_D entries must be in (0, 1]");
    }
    if (cost.alpha < 0 || cost.beta < 0 || cost.gamma1 < 0 || cost.gamma2 < 0 || cost.M < 0 ||
        cost.t_select < 0) {
      throw ConfigError("cost parameters must be non-negative");
    }
  }
  if (bench_repeats < 1) throw ConfigError("bench_repeats must be >= 1");
  for (auto n : bench_sizes) {
    if (n == 0) throw ConfigError("bench_sizes entries must be positive");
  }
  if (collective_elements == 0) throw ConfigError("collective_elements must be positive");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("mode", std::string(to_string(mode)));
  kv.emplace_back("seed", num(seed));
  kv.emplace_back("steps", num(steps));
  kv.emplace_back("topology", topology.kind == Topology::Kind::kThreads ? "threads" : "sockets");
  kv.emplace_back("workers", num(topology.workers));
  if (!topology.hosts.empty()) {
    std::string hosts;
    for (std::size_t i = 0; i < topology.hosts.size(); ++i) {
      hosts += (i ? "," : "") + topology.hosts[i].to_string();
    }
    kv.emplace_back("hosts", hosts);
  }
  kv.emplace_back("timeout_ms", num(topology.timeout.count()));
  kv.emplace_back("compress", train.compress ? "true" : "false");
  kv.emplace_back("selector", std::string(to_string(train.selector)));
  kv.emplace_back("quantize", train.quantize ? "true" : "false");
  kv.emplace_back("ratio", num(train.ratio));
  kv.emplace_back("batch_size", num(train.batch_size));
  kv.emplace_back("lr", num(train.lr));
  kv.emplace_back("lr_decay", num(train.lr_decay));
  kv.emplace_back("lr_decay_epochs", num(train.lr_decay_epochs));
  kv.emplace_back("momentum", num(train.momentum));
  kv.emplace_back("clip_norm", train.clip_norm ? num(*train.clip_norm) : "none");
  kv.emplace_back("warmup", train.warmup.to_string());
  kv.emplace_back("epsilon_trim", num(train.selector_cfg.epsilon_trim));
  kv.emplace_back("epsilon_bs", num(train.selector_cfg.epsilon_bs));
  kv.emplace_back("sample_interval", num(train.selector_cfg.sample_interval));
  kv.emplace_back("dense_floor", num(train.dense_floor));
  kv.emplace_back("model_sizes", join(model.sizes));
  kv.emplace_back("activation", std::string(to_string(model.hidden)));
  kv.emplace_back("loss", std::string(to_string(model.loss)));
  kv.emplace_back("dataset", data.csv_path.empty() ? "blobs" : data.csv_path);
  kv.emplace_back("samples", num(data.blobs.samples));
  kv.emplace_back("dim", num(data.blobs.dim));
  kv.emplace_back("classes", num(data.blobs.classes));
  kv.emplace_back("separation", num(data.blobs.separation));
  kv.emplace_back("noise", num(data.blobs.noise));
  kv.emplace_back("alpha", num(cost.alpha));
  kv.emplace_back("beta", num(cost.beta));
  kv.emplace_back("gamma1", num(cost.gamma1));
  kv.emplace_back("gamma2", num(cost.gamma2));
  kv.emplace_back("elements", num(cost.M));
  kv.emplace_back("t_select", num(cost.t_select));
  kv.emplace_back("sweep_p", join(sweep_p));
  kv.emplace_back("sweep_D", join(sweep_D));
  kv.emplace_back("cost_unit", cost_unit == cost::Unit::kElements ? "elements" : "bytes");
  kv.emplace_back("bench_sizes", join(bench_sizes));
  kv.emplace_back("bench_repeats", num(bench_repeats));
  kv.emplace_back("collective_elements", num(collective_elements));
  return kv;
}

ExperimentConfig config_from_text(const std::string& text) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : parse_key_values(text)) apply_setting(cfg, k, v);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_text(ss.str());
}

}  // namespace sparsync
