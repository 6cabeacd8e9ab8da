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
#include <span>
#include <string>
#include <vector>

#include "sparsync/mlp.hpp"

namespace sparsync {

struct Dataset {
  std::size_t rows = 0;
  std::size_t dim = 0;
  int classes = 0;
  std::vector<float> features;  // rows x dim
  std::vector<int> labels;

  Batch gather(std::span<const std::uint32_t> rows_to_take) const;
  Batch all() const;
};

// Gaussian class clusters. Class c is centred at separation/2 times a
// random unit direction (antipodal for two classes) with isotropic noise.
struct BlobsSpec {
  std::size_t samples = 2048;
  std::size_t dim = 64;
  int classes = 2;
  double separation = 3.0;
  double noise = 1.0;
};

Dataset make_blobs(const BlobsSpec& spec, std::uint64_t seed);

// CSV with a header row; every column but the last is a float feature, the
// last is an integer class label in [0, classes).
Dataset load_csv(const std::string& path);
Dataset parse_csv(const std::string& text);

// Per-worker mini-batch stream. Each epoch draws one permutation of the
// dataset from the shared seed; step s of the epoch hands rank r the slice
// [(s p + r) b, (s p + r + 1) b). Shards are disjoint within a step and all
// ranks derive the same permutation without communicating.
class BatchStream {
 public:
  BatchStream(std::size_t dataset_rows, int world_size, int rank, std::size_t batch_size,
              std::uint64_t seed);

  std::vector<std::uint32_t> next();

  std::size_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t step_in_epoch() const noexcept { return step_; }

 private:
  void reshuffle();

  std::size_t rows_;
  int world_size_;
  int rank_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t steps_per_epoch_;
  std::size_t epoch_ = 0;
  std::size_t step_ = 0;
  std::vector<std::uint32_t> perm_;
};

std::vector<BatchStream> shard_data(const Dataset& data, int world_size,
                                    std::size_t batch_size, std::uint64_t seed);

}  // namespace sparsync
