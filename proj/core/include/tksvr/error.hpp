// Copyright 2026 The tksvr Authors
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

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tksvr {

enum class Errc {
  InvalidArgument,
  DomainViolation,
  NonConvergent,
  ZeroDiagonal,
  CombinatorialOverflow,
  DimensionMismatch,
  NotDifferentiable,
  InfeasiblePoint,
  InfeasibleConfig,
  SchemaVersionMismatch,
  CorruptPayload,
  TruncationTooCoarse,
  GridTooCoarse,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the Errc codes above.
/// DomainViolation errors raised while validating a batch of points also
/// carry the offending point index.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        index_(index) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace tksvr
