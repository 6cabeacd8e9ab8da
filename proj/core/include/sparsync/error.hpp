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
#include <stdexcept>
#include <string>

namespace sparsync {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Length or shape mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Precondition on an argument does not hold (k out of range, bad index...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed wire frame. offset() is the byte position where parsing failed.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error("decode error at offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Point-to-point or collective failure. step is -1 outside a collective.
class TransportError : public Error {
 public:
  TransportError(const std::string& reason, int rank, int step = -1)
      : Error("rank " + std::to_string(rank) +
              (step >= 0 ? " step " + std::to_string(step) : std::string()) +
              ": " + reason),
        reason_(reason),
        rank_(rank),
        step_(step) {}
  const std::string& reason() const noexcept { return reason_; }
  int rank() const noexcept { return rank_; }
  int step() const noexcept { return step_; }

 private:
  std::string reason_;
  int rank_;
  int step_;
};

// Invalid experiment or training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparsync
