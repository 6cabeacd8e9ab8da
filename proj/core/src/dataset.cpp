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

#include "sparsync/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "sparsync/error.hpp"
#include "sparsync/rng.hpp"

namespace sparsync {

Batch Dataset::gather(std::span<const std::uint32_t> rows_to_take) const {
  Batch b;
  b.rows = rows_to_take.size();
  b.cols = dim;
  b.inputs.reserve(b.rows * dim);
  b.labels.reserve(b.rows);
  for (auto r : rows_to_take) {
    if (r >= rows) throw InvalidArgument("dataset: row " + std::to_string(r) + " out of range");
    const auto begin = features.begin() + static_cast<std::ptrdiff_t>(r * dim);
    b.inputs.insert(b.inputs.end(), begin, begin + static_cast<std::ptrdiff_t>(dim));
    b.labels.push_back(labels[r]);
  }
  return b;
}

Batch Dataset::all() const {
  Batch b;
  b.rows = rows;
  b.cols = dim;
  b.inputs = features;
  b.labels = labels;
  return b;
}

Dataset make_blobs(const BlobsSpec& spec, std::uint64_t seed) {
  if (spec.samples == 0 || spec.dim == 0 || spec.classes < 2) {
    throw InvalidArgument("blobs: need samples > 0, dim > 0, classes >= 2");
  }
  Rng rng(seed);
  std::vector<std::vector<double>> centers;
  for (int c = 0; c < spec.classes; ++c) {
    std::vector<double> u(spec.dim);
    if (spec.classes == 2 && c == 1) {
      for (std::size_t i = 0; i < spec.dim; ++i) u[i] = -centers[0][i];
    } else {
      double norm = 0.0;
      for (auto& v : u) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : u) v = v / norm * spec.separation / 2.0;
    }
    centers.push_back(std::move(u));
  }

  Dataset d;
  d.rows = spec.samples;
  d.dim = spec.dim;
  d.classes = spec.classes;
  d.features.reserve(spec.samples * spec.dim);
  d.labels.reserve(spec.samples);
  for (std::size_t s = 0; s < spec.samples; ++s) {
    const int label = static_cast<int>(s % static_cast<std::size_t>(spec.classes));
    for (std::size_t i = 0; i < spec.dim; ++i) {
      d.features.push_back(
          static_cast<float>(centers[static_cast<std::size_t>(label)][i] + spec.noise * rng.normal()));
    }
    d.labels.push_back(label);
  }
  return d;
}

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header row");
  std::size_t columns = 1;
  for (char ch : line) columns += ch == ',' ? 1 : 0;
  if (columns < 2) throw ConfigError("csv: need at least one feature and a label column");

  Dataset d;
  d.dim = columns - 1;
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        if (col + 1 < columns) {
          d.features.push_back(std::stof(cell, &used));
        } else {
          const int label = std::stoi(cell, &used);
          if (label < 0) throw std::out_of_range("negative");
          d.labels.push_back(label);
          max_label = std::max(max_label, label);
        }
      } catch (const std::logic_error&) {
        throw ConfigError("csv: bad value '" + cell + "' on line " + std::to_string(line_no));
      }
      ++col;
    }
    if (col != columns) {
      throw ConfigError("csv: line " + std::to_string(line_no) + " has " + std::to_string(col) +
                        " columns, expected " + std::to_string(columns));
    }
    ++d.rows;
  }
  if (d.rows == 0) throw ConfigError("csv: no data rows");
  d.classes = std::max(2, max_label + 1);
  return d;
}

Dataset load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open dataset " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

BatchStream::BatchStream(std::size_t dataset_rows, int world_size, int rank,
                         std::size_t batch_size, std::uint64_t seed)
    : rows_(dataset_rows),
      world_size_(world_size),
      rank_(rank),
      batch_size_(batch_size),
      seed_(seed) {
  if (rows_ == 0) throw InvalidArgument("batch stream: empty dataset");
  if (world_size_ < 1 || rank_ < 0 || rank_ >= world_size_ || batch_size_ == 0) {
    throw InvalidArgument("batch stream: bad world size, rank, or batch size");
  }
  steps_per_epoch_ = rows_ / (static_cast<std::size_t>(world_size_) * batch_size_);
  if (steps_per_epoch_ == 0) {
    throw InvalidArgument("batch stream: dataset of " + std::to_string(rows_) +
                          " rows is smaller than one global batch");
  }
  reshuffle();
}

void BatchStream::reshuffle() {
  perm_ = Rng(seed_).fork(epoch_).permutation(static_cast<std::uint32_t>(rows_));
}

std::vector<std::uint32_t> BatchStream::next() {
  if (step_ == steps_per_epoch_) {
    ++epoch_;
    step_ = 0;
    reshuffle();
  }
  const std::size_t start =
      (step_ * static_cast<std::size_t>(world_size_) + static_cast<std::size_t>(rank_)) * batch_size_;
  ++step_;
  return {perm_.begin() + static_cast<std::ptrdiff_t>(start),
          perm_.begin() + static_cast<std::ptrdiff_t>(start + batch_size_)};
}

std::vector<BatchStream> shard_data(const Dataset& data, int world_size, std::size_t batch_size,
                                    std::uint64_t seed) {
  std::vector<BatchStream> streams;
  for (int r = 0; r < world_size; ++r) streams.emplace_back(data.rows, world_size, r, batch_size, seed);
  return streams;
}

}  // namespace sparsync
