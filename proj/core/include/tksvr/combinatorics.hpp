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
#include <cstdint>
#include <span>

namespace tksvr {

/// Exact binomial coefficient C(n, k); throws CombinatorialOverflow when the
/// result does not fit in 64 bits.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Multinomial coefficient |counts|! / prod(counts_i!) in floating point.
/// Computed exactly through integer arithmetic when |counts| <= 20 and via
/// log-gamma beyond that.
double multinomial(std::span<const std::size_t> counts);

/// Neumaier-compensated accumulator. Addition order is the caller's, so two
/// runs over the same sequence give bit-identical sums.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (x >= 0 ? x : -x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace tksvr
