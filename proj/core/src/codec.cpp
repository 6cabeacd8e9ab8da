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

#include "sparsync/codec.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "sparsync/error.hpp"

namespace sparsync {

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const std::byte> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

bool same_sign(std::span<const float> values, bool& positive) {
  bool seen_pos = false;
  bool seen_neg = false;
  for (float v : values) {
    seen_pos |= v > 0.0f;
    seen_neg |= v < 0.0f;
  }
  positive = !seen_neg;
  return !(seen_pos && seen_neg);
}

}  // namespace

std::string_view to_string(AsqPhase phase) {
  return phase == AsqPhase::kPositive ? "positive" : "negative";
}

bool operator==(const SparseMessage& a, const SparseMessage& b) {
  return a.mode == b.mode && a.indices == b.indices && bitwise_equal(a.payload, b.payload);
}

std::size_t encoded_size(PayloadMode mode, std::size_t count) {
  return kFrameHeaderBytes + 4 * count + 4 * (mode == PayloadMode::kQuantMean ? 1 : count);
}

void validate(const SparseMessage& msg) {
  if (msg.indices.size() > 0xffffffffu) throw InvalidArgument("message: count exceeds u32");
  for (std::size_t j = 1; j < msg.indices.size(); ++j) {
    if (msg.indices[j] <= msg.indices[j - 1]) {
      throw InvalidArgument("message: indices not strictly increasing at position " +
                            std::to_string(j));
    }
  }
  switch (msg.mode) {
    case PayloadMode::kDenseValues:
      if (msg.payload.size() != msg.indices.size()) {
        throw InvalidArgument("message: dense payload size differs from count");
      }
      break;
    case PayloadMode::kQuantMean:
      if (msg.payload.size() != 1) throw InvalidArgument("message: quantized payload must hold 1 value");
      if (!std::isfinite(msg.payload[0])) throw InvalidArgument("message: non-finite mean");
      break;
    default:
      throw InvalidArgument("message: unknown mode");
  }
}

SparseMessage dense_message(const SelectionResult& sel) {
  SparseMessage m;
  m.mode = PayloadMode::kDenseValues;
  m.indices = sel.indices;
  m.payload = sel.values;
  return m;
}

SelectionResult asq_select(std::span<const float> x, std::size_t k, AsqPhase phase,
                           const SelectorConfig& cfg, SelectorKind kind) {
  if (k < 1 || k > x.size()) {
    throw InvalidArgument("asq_select: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(x.size()) + "]");
  }
  // Sign-restricted view: entries of the wrong sign become zero and can
  // never outrank a strictly signed candidate.
  const bool positive = phase == AsqPhase::kPositive;
  std::vector<float> view(x.size());
  std::size_t candidates = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float v = positive ? x[i] : -x[i];
    view[i] = v > 0.0f ? v : 0.0f;
    candidates += v > 0.0f ? 1 : 0;
  }
  SelectionResult r;
  if (candidates == 0) return r;
  const std::size_t kk = std::min(k, candidates);

  ThresholdCache scratch;
  if (kind == SelectorKind::kSampledBinarySearch) {
    throw InvalidArgument("asq_select: sampled threshold search cannot be combined with quantization");
  }
  r = select(kind, view, kk, cfg, &scratch);
  // Threshold selectors may return zeros when the view is mostly empty.
  std::size_t w = 0;
  for (std::size_t j = 0; j < r.indices.size(); ++j) {
    if (view[r.indices[j]] > 0.0f) {
      r.indices[w] = r.indices[j];
      r.values[w] = x[r.indices[j]];
      ++w;
    }
  }
  r.indices.resize(w);
  r.values.resize(w);
  return r;
}

SparseMessage quantize_mean(const SelectionResult& sel) {
  SparseMessage m;
  m.mode = PayloadMode::kQuantMean;
  m.indices = sel.indices;
  if (sel.values.empty()) {
    m.payload = {0.0f};
    return m;
  }
  bool positive = true;
  if (!same_sign(sel.values, positive)) {
    throw InvalidArgument("quantize_mean: selection mixes positive and negative values");
  }
  double sum = 0.0;
  for (float v : sel.values) sum += v;
  m.payload = {static_cast<float>(sum / static_cast<double>(sel.values.size()))};
  return m;
}

void encode_append(const SparseMessage& msg, std::vector<std::byte>& out) {
  validate(msg);
  out.reserve(out.size() + encoded_size(msg));
  put_u32(out, static_cast<std::uint32_t>(msg.indices.size()));
  out.push_back(static_cast<std::byte>(msg.mode));
  for (auto i : msg.indices) put_u32(out, i);
  for (float v : msg.payload) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

std::vector<std::byte> encode(const SparseMessage& msg) {
  std::vector<std::byte> out;
  encode_append(msg, out);
  return out;
}

SparseMessage decode_prefix(std::span<const std::byte> bytes, std::size_t& consumed,
                            std::size_t base_offset) {
  if (bytes.size() < kFrameHeaderBytes) {
    throw DecodeError("truncated header", base_offset + bytes.size());
  }
  const std::uint32_t count = get_u32(bytes, 0);
  const auto mode_byte = std::to_integer<std::uint8_t>(bytes[4]);
  if (mode_byte > static_cast<std::uint8_t>(PayloadMode::kQuantMean)) {
    throw DecodeError("unknown mode " + std::to_string(mode_byte), base_offset + 4);
  }
  const auto mode = static_cast<PayloadMode>(mode_byte);
  // Checked in 64 bits so a hostile count cannot overflow or trigger a huge
  // allocation before the length check.
  const std::uint64_t need = encoded_size(mode, count);
  if (need > bytes.size()) {
    throw DecodeError("truncated frame: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(bytes.size()),
                      base_offset + bytes.size());
  }

  SparseMessage m;
  m.mode = mode;
  m.indices.resize(count);
  std::size_t at = kFrameHeaderBytes;
  for (std::uint32_t j = 0; j < count; ++j, at += 4) {
    m.indices[j] = get_u32(bytes, at);
    if (j > 0 && m.indices[j] <= m.indices[j - 1]) {
      throw DecodeError("indices not strictly increasing", base_offset + at);
    }
  }
  const std::size_t values = mode == PayloadMode::kQuantMean ? 1 : count;
  m.payload.resize(values);
  for (std::size_t j = 0; j < values; ++j, at += 4) {
    m.payload[j] = std::bit_cast<float>(get_u32(bytes, at));
  }
  if (mode == PayloadMode::kQuantMean && !std::isfinite(m.payload[0])) {
    throw DecodeError("non-finite quantized mean", base_offset + at - 4);
  }
  consumed = at;
  return m;
}

SparseMessage decode(std::span<const std::byte> bytes) {
  std::size_t consumed = 0;
  SparseMessage m = decode_prefix(bytes, consumed);
  if (consumed != bytes.size()) {
    throw DecodeError("overlong frame: " + std::to_string(bytes.size() - consumed) +
                          " trailing bytes",
                      consumed);
  }
  return m;
}

void decompress_apply(DenseTensor& dst, const SparseMessage& msg, float scale) {
  if (msg.mode == PayloadMode::kQuantMean) {
    scatter_add(dst, msg.indices, std::span<const float>(msg.payload.data(), 1), scale);
    return;
  }
  scatter_add(dst, msg.indices, msg.payload, scale);
}

}  // namespace sparsync
