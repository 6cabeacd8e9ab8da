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
#include <string_view>
#include <vector>

#include "sparsync/selection.hpp"
#include "sparsync/tensor.hpp"

namespace sparsync {

enum class AsqPhase : std::uint8_t { kPositive, kNegative };

inline AsqPhase flip(AsqPhase p) {
  return p == AsqPhase::kPositive ? AsqPhase::kNegative : AsqPhase::kPositive;
}
std::string_view to_string(AsqPhase phase);

enum class PayloadMode : std::uint8_t { kDenseValues = 0, kQuantMean = 1 };

// One rank's communication-set on the wire.
//
// Frame layout, little-endian, frozen:
//   [count: u32][mode: u8][indices: count x u32][payload]
// payload is count x f32 for kDenseValues and exactly one f32 (the mean)
// for kQuantMean, so a frame is 5 + 8c or 9 + 4c bytes.
struct SparseMessage {
  PayloadMode mode = PayloadMode::kDenseValues;
  std::vector<std::uint32_t> indices;
  std::vector<float> payload;

  std::size_t count() const noexcept { return indices.size(); }
};

// Bitwise equality (payload compared by bit pattern).
bool operator==(const SparseMessage& a, const SparseMessage& b);

inline constexpr std::size_t kFrameHeaderBytes = 5;

std::size_t encoded_size(PayloadMode mode, std::size_t count);
inline std::size_t encoded_size(const SparseMessage& m) {
  return encoded_size(m.mode, m.count());
}

// Throws InvalidArgument if the message violates its invariants.
void validate(const SparseMessage& msg);

SparseMessage dense_message(const SelectionResult& sel);

// Select the k largest positive (kPositive) or k most negative (kNegative)
// entries. Returns fewer than k when not enough entries have the sign.
SelectionResult asq_select(std::span<const float> x, std::size_t k, AsqPhase phase,
                           const SelectorConfig& cfg,
                           SelectorKind kind = SelectorKind::kTrimmed);

// Collapse a same-signed selection into one mean value.
SparseMessage quantize_mean(const SelectionResult& sel);

std::vector<std::byte> encode(const SparseMessage& msg);
void encode_append(const SparseMessage& msg, std::vector<std::byte>& out);

SparseMessage decode(std::span<const std::byte> bytes);
// Decode one frame from the front of bytes; sets consumed to its length.
// base_offset is added to offsets reported in DecodeError.
SparseMessage decode_prefix(std::span<const std::byte> bytes, std::size_t& consumed,
                            std::size_t base_offset = 0);

// dst[idx[j]] += scale * value_j
void decompress_apply(DenseTensor& dst, const SparseMessage& msg, float scale);

}  // namespace sparsync
