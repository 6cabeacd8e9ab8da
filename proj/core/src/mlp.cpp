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

#include "sparsync/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsync/error.hpp"

namespace sparsync {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "?";
}

std::string_view to_string(LossKind l) {
  return l == LossKind::kSoftmaxCrossEntropy ? "softmax_ce" : "mse";
}

std::optional<Activation> parse_activation(std::string_view s) {
  for (auto a : {Activation::kIdentity, Activation::kTanh, Activation::kRelu}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

std::optional<LossKind> parse_loss(std::string_view s) {
  for (auto l : {LossKind::kSoftmaxCrossEntropy, LossKind::kMeanSquaredError}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

MlpModel::MlpModel(MlpSpec spec) : spec_(std::move(spec)) {
  if (spec_.sizes.size() < 2) throw InvalidArgument("mlp: need at least input and output sizes");
  for (auto s : spec_.sizes) {
    if (s == 0) throw InvalidArgument("mlp: zero-width layer");
  }
  for (std::size_t l = 0; l + 1 < spec_.sizes.size(); ++l) {
    params_.emplace_back(spec_.sizes[l] * spec_.sizes[l + 1]);
    params_.emplace_back(spec_.sizes[l + 1]);
  }
}

MlpModel MlpModel::initialized(const MlpSpec& spec, Rng& rng) {
  MlpModel m(spec);
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const double fan_in = static_cast<double>(spec.sizes[l]);
    const double fan_out = static_cast<double>(spec.sizes[l + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : m.params_[weight_index(l)]) w = static_cast<float>(rng.uniform(-limit, limit));
  }
  return m;
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: return std::tanh(z);
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kIdentity: break;
  }
  return z;
}

// Derivative expressed through the pre-activation and the activation value.
double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity: break;
  }
  return 1.0;
}

void check_batch(const MlpModel& model, const Batch& batch) {
  if (batch.cols != model.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols) + " columns, model expects " +
                     std::to_string(model.input_dim()));
  }
  if (batch.inputs.size() != batch.rows * batch.cols) {
    throw ShapeError("batch inputs size does not match rows x cols");
  }
  const std::size_t out = model.output_dim();
  const bool ce = model.spec().loss == LossKind::kSoftmaxCrossEntropy;
  if (ce || batch.targets.empty()) {
    if (batch.labels.size() != batch.rows) throw ShapeError("batch needs one label per row");
    for (int y : batch.labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= out) {
        throw ShapeError("label " + std::to_string(y) + " outside [0, " + std::to_string(out) + ")");
      }
    }
  } else if (batch.targets.size() != batch.rows * out) {
    throw ShapeError("batch targets size does not match rows x outputs");
  }
}

// Runs the whole batch; accumulates gradients into grads when non-null.
void run(const MlpModel& model, const Batch& batch, std::vector<std::vector<double>>* grads,
         double& loss_sum, std::size_t& correct) {
  check_batch(model, batch);
  const auto& spec = model.spec();
  const auto& params = model.params();
  const std::size_t layers = model.num_layers();
  const std::size_t out = model.output_dim();
  const bool ce = spec.loss == LossKind::kSoftmaxCrossEntropy;

  std::vector<std::vector<double>> pre(layers);
  std::vector<std::vector<double>> act(layers + 1);
  std::vector<double> delta;
  std::vector<double> next_delta;

  for (std::size_t row = 0; row < batch.rows; ++row) {
    act[0].assign(batch.inputs.begin() + static_cast<std::ptrdiff_t>(row * batch.cols),
                  batch.inputs.begin() + static_cast<std::ptrdiff_t>((row + 1) * batch.cols));
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = spec.sizes[l];
      const std::size_t width = spec.sizes[l + 1];
      const auto& W = params[MlpModel::weight_index(l)];
      const auto& b = params[MlpModel::bias_index(l)];
      pre[l].assign(width, 0.0);
      act[l + 1].assign(width, 0.0);
      const bool last = l + 1 == layers;
      for (std::size_t o = 0; o < width; ++o) {
        double z = b[o];
        const float* w = W.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) z += static_cast<double>(w[i]) * act[l][i];
        pre[l][o] = z;
        act[l + 1][o] = last ? z : activate(spec.hidden, z);
      }
    }

    const auto& z = act[layers];
    const int label = batch.labels.empty() ? -1 : batch.labels[row];
    delta.assign(out, 0.0);
    if (ce) {
      const double zmax = *std::max_element(z.begin(), z.end());
      double denom = 0.0;
      for (double v : z) denom += std::exp(v - zmax);
      const double log_denom = std::log(denom) + zmax;
      loss_sum += log_denom - z[static_cast<std::size_t>(label)];
      for (std::size_t o = 0; o < out; ++o) {
        delta[o] = std::exp(z[o] - log_denom) - (static_cast<int>(o) == label ? 1.0 : 0.0);
      }
    } else {
      for (std::size_t o = 0; o < out; ++o) {
        const double t = batch.targets.empty()
                             ? (static_cast<int>(o) == label ? 1.0 : 0.0)
                             : static_cast<double>(batch.targets[row * out + o]);
        const double diff = z[o] - t;
        loss_sum += diff * diff;
        delta[o] = 2.0 * diff;
      }
    }
    if (label >= 0) {
      const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
      correct += best == label ? 1 : 0;
    }

    if (grads == nullptr) continue;
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = spec.sizes[l];
      const std::size_t width = spec.sizes[l + 1];
      auto& gW = (*grads)[MlpModel::weight_index(l)];
      auto& gb = (*grads)[MlpModel::bias_index(l)];
      for (std::size_t o = 0; o < width; ++o) {
        gb[o] += delta[o];
        double* g = gW.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) g[i] += delta[o] * act[l][i];
      }
      if (l == 0) break;
      const auto& W = params[MlpModel::weight_index(l)];
      next_delta.assign(in, 0.0);
      for (std::size_t o = 0; o < width; ++o) {
        const float* w = W.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) next_delta[i] += static_cast<double>(w[i]) * delta[o];
      }
      for (std::size_t i = 0; i < in; ++i) {
        next_delta[i] *= activate_grad(spec.hidden, pre[l - 1][i], act[l][i]);
      }
      std::swap(delta, next_delta);
    }
  }
}

}  // namespace

GradientResult forward_backward(const MlpModel& model, const Batch& batch) {
  std::vector<std::vector<double>> acc;
  for (const auto& p : model.params()) acc.emplace_back(p.size(), 0.0);
  GradientResult r;
  run(model, batch, &acc, r.loss_sum, r.correct);
  for (const auto& g : acc) {
    DenseTensor t(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) t[i] = static_cast<float>(g[i]);
    r.grads.push_back(std::move(t));
  }
  return r;
}

Evaluation evaluate(const MlpModel& model, const Batch& batch) {
  double loss = 0.0;
  std::size_t correct = 0;
  run(model, batch, nullptr, loss, correct);
  Evaluation e;
  if (batch.rows > 0) {
    e.mean_loss = loss / static_cast<double>(batch.rows);
    e.accuracy = static_cast<double>(correct) / static_cast<double>(batch.rows);
  }
  return e;
}

}  // namespace sparsync
