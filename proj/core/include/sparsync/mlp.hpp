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
#include <string_view>
#include <optional>
#include <vector>

#include "sparsync/rng.hpp"
#include "sparsync/tensor.hpp"

namespace sparsync {

enum class Activation { kIdentity, kTanh, kRelu };
enum class LossKind { kSoftmaxCrossEntropy, kMeanSquaredError };

std::string_view to_string(Activation a);
std::string_view to_string(LossKind l);
std::optional<Activation> parse_activation(std::string_view s);
std::optional<LossKind> parse_loss(std::string_view s);

// Layer widths, e.g. {64, 32, 2}. Hidden layers use `hidden`; the output
// layer is always linear and feeds the loss.
struct MlpSpec {
  std::vector<std::size_t> sizes{64, 32, 2};
  Activation hidden = Activation::kTanh;
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
};

// Row-major mini-batch. labels drive cross-entropy (and one-hot MSE targets
// when targets is empty); targets holds rows x outputs for regression.
struct Batch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> inputs;
  std::vector<int> labels;
  std::vector<float> targets;
};

// Fully connected network. params is the ordered tensor list
// [W0, b0, W1, b1, ...] with W_l stored out x in, row-major.
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(MlpSpec spec);

  // Uniform Glorot initialisation, zero biases.
  static MlpModel initialized(const MlpSpec& spec, Rng& rng);

  const MlpSpec& spec() const noexcept { return spec_; }
  std::size_t num_layers() const noexcept { return spec_.sizes.size() - 1; }
  std::size_t input_dim() const noexcept { return spec_.sizes.front(); }
  std::size_t output_dim() const noexcept { return spec_.sizes.back(); }

  TensorList& params() noexcept { return params_; }
  const TensorList& params() const noexcept { return params_; }

  static std::size_t weight_index(std::size_t layer) { return 2 * layer; }
  static std::size_t bias_index(std::size_t layer) { return 2 * layer + 1; }
  // True for the weight and bias of the last layer.
  bool is_output_param(std::size_t param_index) const noexcept {
    return param_index / 2 + 1 == num_layers();
  }

 private:
  MlpSpec spec_;
  TensorList params_;
};

struct GradientResult {
  // Gradient of the summed per-sample loss, aligned with params().
  TensorList grads;
  double loss_sum = 0.0;
  std::size_t correct = 0;
};

// Per-sample losses: softmax cross-entropy, or sum over outputs of
// (y - t)^2 for MSE. Gradients are exact and summed over the batch.
GradientResult forward_backward(const MlpModel& model, const Batch& batch);

struct Evaluation {
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const MlpModel& model, const Batch& batch);

}  // namespace sparsync
