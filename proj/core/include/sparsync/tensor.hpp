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
#include <initializer_list>
#include <span>
#include <vector>

namespace sparsync {

// Flat contiguous float32 buffer. A model is an ordered list of these, one
// per parameter tensor.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::size_t n, float fill = 0.0f) : data_(n, fill) {}
  explicit DenseTensor(std::vector<float> values) : data_(std::move(values)) {}
  DenseTensor(std::initializer_list<float> values) : data_(values) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<float> span() noexcept { return data_; }
  std::span<const float> span() const noexcept { return data_; }
  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  const std::vector<float>& values() const noexcept { return data_; }

  void fill(float v);

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<float> data_;
};

using TensorList = std::vector<DenseTensor>;

inline DenseTensor zeros(std::size_t n) { return DenseTensor(n); }

// alpha * x + y
DenseTensor axpy(float alpha, const DenseTensor& x, const DenseTensor& y);

// In-place y += alpha * x.
void axpy_inplace(float alpha, std::span<const float> x, std::span<float> y);

// dst[indices[j]] += scale * values[j]. indices must be strictly increasing
// and in range. A single-element values span is broadcast to every index.
void scatter_add(DenseTensor& dst, std::span<const std::uint32_t> indices,
                 std::span<const float> values, float scale);

// Euclidean norm with 64-bit accumulation.
float l2_norm(std::span<const float> x);
inline float l2_norm(const DenseTensor& x) { return l2_norm(x.span()); }

// Norm of the concatenation of all tensors.
float global_l2_norm(const TensorList& tensors);

// True iff both tensors have the same length and identical bit patterns.
bool bitwise_equal(std::span<const float> a, std::span<const float> b);

bool all_finite(std::span<const float> x);

}  // namespace sparsync
