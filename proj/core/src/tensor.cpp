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

#include "sparsync/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "sparsync/error.hpp"

namespace sparsync {

void DenseTensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

DenseTensor axpy(float alpha, const DenseTensor& x, const DenseTensor& y) {
  if (x.size() != y.size()) {
    throw ShapeError("axpy: length mismatch " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  DenseTensor out = y;
  axpy_inplace(alpha, x.span(), out.span());
  return out;
}

void axpy_inplace(float alpha, std::span<const float> x, std::span<float> y) {
  if (x.size() != y.size()) {
    throw ShapeError("axpy: length mismatch " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i] + y[i];
}

void scatter_add(DenseTensor& dst, std::span<const std::uint32_t> indices,
                 std::span<const float> values, float scale) {
  const bool broadcast = values.size() == 1 && indices.size() != 1;
  if (!broadcast && values.size() != indices.size()) {
    throw ShapeError("scatter_add: " + std::to_string(indices.size()) + " indices but " +
                     std::to_string(values.size()) + " values");
  }
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= dst.size()) {
      throw InvalidArgument("scatter_add: index " + std::to_string(indices[j]) +
                            " out of range for length " + std::to_string(dst.size()));
    }
    if (j > 0 && indices[j] <= indices[j - 1]) {
      throw InvalidArgument("scatter_add: indices not strictly increasing at position " +
                            std::to_string(j));
    }
  }
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const float v = broadcast ? values[0] : values[j];
    dst[indices[j]] = scale * v + dst[indices[j]];
  }
}

float l2_norm(std::span<const float> x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * static_cast<double>(v);
  return static_cast<float>(std::sqrt(acc));
}

float global_l2_norm(const TensorList& tensors) {
  double acc = 0.0;
  for (const auto& t : tensors)
    for (float v : t) acc += static_cast<double>(v) * static_cast<double>(v);
  return static_cast<float>(std::sqrt(acc));
}

bool bitwise_equal(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
  }
  return true;
}

bool all_finite(std::span<const float> x) {
  return std::all_of(x.begin(), x.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace sparsync
