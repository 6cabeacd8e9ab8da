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

#include "sparsync/collectives.hpp"

#include <bit>
#include <string>

#include "sparsync/error.hpp"

namespace sparsync {

namespace {

void append_floats(std::span<const float> values, std::vector<std::byte>& out) {
  out.reserve(out.size() + 4 * values.size());
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xffu));
  }
}

float float_at(std::span<const std::byte> in, std::size_t j) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= std::to_integer<std::uint32_t>(in[4 * j + i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

void expect_floats(std::span<const std::byte> bytes, std::size_t count, int rank, int step) {
  if (bytes.size() != 4 * count) {
    throw TransportError("expected " + std::to_string(4 * count) + " bytes, received " +
                             std::to_string(bytes.size()),
                         rank, step);
  }
}

}  // namespace

bool is_power_of_two(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::uint64_t n) { return std::countr_zero(n); }

Communicator::Communicator(std::unique_ptr<Transport> transport)
    : transport_(std::move(transport)) {
  if (!transport_) throw InvalidArgument("communicator: null transport");
  rank_ = transport_->rank();
  size_ = transport_->size();
  if (!is_power_of_two(static_cast<std::uint64_t>(size_))) {
    throw InvalidArgument("communicator: world size " + std::to_string(size_) +
                          " is not a power of two");
  }
}

std::vector<std::byte> Communicator::exchange(int peer, std::span<const std::byte> bytes,
                                              int step) {
  try {
    std::vector<std::byte> received;
    if (rank_ < peer) {
      transport_->send(peer, bytes);
      received = transport_->recv(peer);
    } else {
      received = transport_->recv(peer);
      transport_->send(peer, bytes);
    }
    stats_.messages_sent += 1;
    stats_.bytes_sent += bytes.size();
    stats_.steps += 1;
    return received;
  } catch (const TransportError& e) {
    throw TransportError(e.reason(), rank_, step);
  }
}

std::vector<SparseMessage> allgather_sparse(Communicator& comm, const SparseMessage& local) {
  const int p = comm.size();
  const int r = comm.rank();
  std::vector<std::vector<std::byte>> frames(static_cast<std::size_t>(p));
  std::vector<SparseMessage> gathered(static_cast<std::size_t>(p));
  frames[static_cast<std::size_t>(r)] = encode(local);
  gathered[static_cast<std::size_t>(r)] = decode(frames[static_cast<std::size_t>(r)]);

  int step = 0;
  for (int d = 1; d < p; d <<= 1, ++step) {
    const int partner = r ^ d;
    const int mine = r & ~(d - 1);
    const int theirs = partner & ~(d - 1);

    std::vector<std::byte> outgoing;
    for (int i = mine; i < mine + d; ++i) {
      const auto& f = frames[static_cast<std::size_t>(i)];
      outgoing.insert(outgoing.end(), f.begin(), f.end());
    }
    const std::vector<std::byte> incoming = comm.exchange(partner, outgoing, step);

    std::size_t at = 0;
    for (int i = theirs; i < theirs + d; ++i) {
      std::size_t used = 0;
      SparseMessage m = decode_prefix(std::span(incoming).subspan(at), used, at);
      frames[static_cast<std::size_t>(i)].assign(incoming.begin() + static_cast<std::ptrdiff_t>(at),
                                                 incoming.begin() + static_cast<std::ptrdiff_t>(at + used));
      gathered[static_cast<std::size_t>(i)] = std::move(m);
      at += used;
    }
    if (at != incoming.size()) {
      throw DecodeError("trailing bytes after gathered frames", at);
    }
  }
  return gathered;
}

namespace {

struct HalvingResult {
  std::vector<float> buffer;
  std::size_t lo = 0;
  std::size_t hi = 0;
  int steps = 0;
};

HalvingResult halving(Communicator& comm, const DenseTensor& x) {
  const auto p = static_cast<std::size_t>(comm.size());
  const int r = comm.rank();
  const std::size_t padded = (x.size() + p - 1) / p * p;
  HalvingResult h;
  h.buffer.assign(padded, 0.0f);
  std::copy(x.begin(), x.end(), h.buffer.begin());
  h.lo = 0;
  h.hi = padded;

  for (int d = static_cast<int>(p) / 2; d >= 1; d /= 2, ++h.steps) {
    const int partner = r ^ d;
    const std::size_t mid = h.lo + (h.hi - h.lo) / 2;
    const bool upper = (r & d) != 0;
    const std::size_t keep_lo = upper ? mid : h.lo;
    const std::size_t keep_hi = upper ? h.hi : mid;
    const std::size_t send_lo = upper ? h.lo : mid;
    const std::size_t send_hi = upper ? mid : h.hi;

    std::vector<std::byte> outgoing;
    append_floats(std::span(h.buffer).subspan(send_lo, send_hi - send_lo), outgoing);
    const auto incoming = comm.exchange(partner, outgoing, h.steps);
    expect_floats(incoming, keep_hi - keep_lo, r, h.steps);
    for (std::size_t i = keep_lo; i < keep_hi; ++i) {
      h.buffer[i] = h.buffer[i] + float_at(incoming, i - keep_lo);
    }
    h.lo = keep_lo;
    h.hi = keep_hi;
  }
  return h;
}

}  // namespace

ReducedSegment reduce_scatter_halving(Communicator& comm, const DenseTensor& x) {
  HalvingResult h = halving(comm, x);
  ReducedSegment seg;
  seg.offset = h.lo;
  seg.values = DenseTensor(std::vector<float>(h.buffer.begin() + static_cast<std::ptrdiff_t>(h.lo),
                                              h.buffer.begin() + static_cast<std::ptrdiff_t>(h.hi)));
  return seg;
}

DenseTensor allreduce_dense(Communicator& comm, const DenseTensor& x) {
  const int p = comm.size();
  const int r = comm.rank();
  HalvingResult h = halving(comm, x);
  int step = h.steps;
  for (int d = 1; d < p; d <<= 1, ++step) {
    const int partner = r ^ d;
    const std::size_t width = h.hi - h.lo;
    std::vector<std::byte> outgoing;
    append_floats(std::span(h.buffer).subspan(h.lo, width), outgoing);
    const auto incoming = comm.exchange(partner, outgoing, step);
    expect_floats(incoming, width, r, step);
    const std::size_t dst = (r & d) != 0 ? h.lo - width : h.hi;
    for (std::size_t i = 0; i < width; ++i) h.buffer[dst + i] = float_at(incoming, i);
    if ((r & d) != 0) {
      h.lo -= width;
    } else {
      h.hi += width;
    }
  }
  h.buffer.resize(x.size());
  return DenseTensor(std::move(h.buffer));
}

}  // namespace sparsync
