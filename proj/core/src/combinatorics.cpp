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

#include "tksvr/combinatorics.hpp"

#include <cmath>

#include "tksvr/error.hpp"

namespace tksvr {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DomainViolation: return "DomainViolation";
    case Errc::NonConvergent: return "NonConvergent";
    case Errc::ZeroDiagonal: return "ZeroDiagonal";
    case Errc::CombinatorialOverflow: return "CombinatorialOverflow";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotDifferentiable: return "NotDifferentiable";
    case Errc::InfeasiblePoint: return "InfeasiblePoint";
    case Errc::InfeasibleConfig: return "InfeasibleConfig";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::CorruptPayload: return "CorruptPayload";
    case Errc::TruncationTooCoarse: return "TruncationTooCoarse";
    case Errc::GridTooCoarse: return "GridTooCoarse";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i is always integral; split by gcd to delay overflow.
    const std::uint64_t num = n - k + i;
    std::uint64_t a = result, b = num, den = i;
    auto gcd = [](std::uint64_t x, std::uint64_t y) {
      while (y != 0) {
        const auto t = x % y;
        x = y;
        y = t;
      }
      return x;
    };
    const std::uint64_t g1 = gcd(a, den);
    a /= g1;
    den /= g1;
    b /= den;
    if (b != 0 && a > UINT64_MAX / b) {
      throw Error(Errc::CombinatorialOverflow,
                  "binomial(" + std::to_string(n) + ", " + std::to_string(k) + ") exceeds 64 bits");
    }
    result = a * b;
  }
  return result;
}

double multinomial(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total <= 20) {
    std::uint64_t fact[21];
    fact[0] = 1;
    for (std::uint64_t i = 1; i <= 20; ++i) fact[i] = fact[i - 1] * i;
    std::uint64_t value = fact[total];
    for (auto c : counts) value /= fact[c];
    return static_cast<double>(value);
  }
  double log_value = std::lgamma(static_cast<double>(total) + 1.0);
  for (auto c : counts) log_value -= std::lgamma(static_cast<double>(c) + 1.0);
  return std::exp(log_value);
}

}  // namespace tksvr
