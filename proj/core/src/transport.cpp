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

#include "sparsync/transport.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <string>

#include "sparsync/error.hpp"

namespace sparsync {

struct InProcessFabric::State {
  struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<std::byte>> frames;
  };

  State(int p, std::chrono::milliseconds t)
      : world_size(p), timeout(t), boxes(static_cast<std::size_t>(p) * static_cast<std::size_t>(p)) {}

  Mailbox& box(int src, int dst) {
    return boxes[static_cast<std::size_t>(src) * static_cast<std::size_t>(world_size) +
                 static_cast<std::size_t>(dst)];
  }

  void shutdown() {
    aborted.store(true);
    for (auto& b : boxes) {
      std::lock_guard lock(b.mu);
      b.cv.notify_all();
    }
  }

  int world_size;
  std::chrono::milliseconds timeout;
  std::vector<Mailbox> boxes;
  std::atomic<bool> aborted{false};
};

namespace {

class InProcessTransport final : public Transport {
 public:
  InProcessTransport(std::shared_ptr<InProcessFabric::State> state, int rank)
      : state_(std::move(state)), rank_(rank) {}

  int rank() const override { return rank_; }
  int size() const override { return state_->world_size; }

  void send(int peer, std::span<const std::byte> bytes) override {
    check_peer(peer);
    if (state_->aborted.load()) throw TransportError("transport shut down", rank_);
    auto& box = state_->box(rank_, peer);
    {
      std::lock_guard lock(box.mu);
      box.frames.emplace_back(bytes.begin(), bytes.end());
    }
    box.cv.notify_all();
  }

  std::vector<std::byte> recv(int peer) override {
    check_peer(peer);
    auto& box = state_->box(peer, rank_);
    std::unique_lock lock(box.mu);
    const bool ready = box.cv.wait_for(lock, state_->timeout, [&] {
      return !box.frames.empty() || state_->aborted.load();
    });
    if (!box.frames.empty()) {
      auto frame = std::move(box.frames.front());
      box.frames.pop_front();
      return frame;
    }
    if (!ready) {
      throw TransportError("timed out waiting for rank " + std::to_string(peer), rank_);
    }
    throw TransportError("transport shut down", rank_);
  }

  void abort() override { state_->shutdown(); }

 private:
  void check_peer(int peer) const {
    if (peer < 0 || peer >= state_->world_size || peer == rank_) {
      throw TransportError("invalid peer " + std::to_string(peer), rank_);
    }
  }

  std::shared_ptr<InProcessFabric::State> state_;
  int rank_;
};

}  // namespace

InProcessFabric::InProcessFabric(std::shared_ptr<State> state) : state_(std::move(state)) {}

std::shared_ptr<InProcessFabric> InProcessFabric::create(int world_size,
                                                         std::chrono::milliseconds timeout) {
  if (world_size < 1) throw InvalidArgument("fabric: world size must be >= 1");
  return std::shared_ptr<InProcessFabric>(
      new InProcessFabric(std::make_shared<State>(world_size, timeout)));
}

int InProcessFabric::size() const noexcept { return state_->world_size; }

std::unique_ptr<Transport> InProcessFabric::endpoint(int rank) {
  if (rank < 0 || rank >= state_->world_size) {
    throw InvalidArgument("fabric: rank " + std::to_string(rank) + " out of range");
  }
  return std::make_unique<InProcessTransport>(state_, rank);
}

void InProcessFabric::shutdown() { state_->shutdown(); }

}  // namespace sparsync
