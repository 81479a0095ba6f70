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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "tksvr/combinatorics.hpp"
#include "tksvr/kernels.hpp"

namespace tksvr {

/// Upper bound on C(n+m-1, m), the number of distinct kernel entries over n
/// training points. 2^25 doubles is 256 MiB of cache; n = 50, m = 6 fits.
inline constexpr std::uint64_t kDefaultMultisetCap = std::uint64_t{1} << 25;

/// C(n+m-1, m). Throws CombinatorialOverflow past 64 bits.
std::uint64_t multiset_count(std::size_t n, std::size_t m);

/// A multiset of m indices from {0..n-1} stored as the counts alpha in N^n.
struct MultisetEntry {
  std::vector<std::size_t> counts;
  double weight = 0.0;  // m! / prod(alpha_i!)
};

/// Materialized enumeration, for inspection and tests. Order matches
/// for_each_multiset.
std::vector<MultisetEntry> enumerate_multisets(std::size_t n, std::size_t m,
                                               std::uint64_t cap = kDefaultMultisetCap);

/// Visits every nondecreasing index tuple i_1 <= ... <= i_m over {0..n-1} in
/// lexicographic order, passing the tuple and its multinomial weight.
template <class Fn>
void for_each_multiset(std::size_t n, std::size_t m, Fn&& fn) {
  if (n == 0) return;
  std::vector<std::size_t> idx(m, 0);
  std::vector<std::size_t> run(m, 0);
  while (true) {
    // Run lengths of equal indices give the multinomial denominator.
    std::size_t k = 0;
    std::size_t runs = 0;
    while (k < m) {
      std::size_t j = k;
      while (j < m && idx[j] == idx[k]) ++j;
      run[runs++] = j - k;
      k = j;
    }
    const double weight = multinomial(std::span<const std::size_t>(run.data(), runs));
    fn(std::span<const std::size_t>(idx), weight);

    std::size_t pos = m;
    while (pos > 0 && idx[pos - 1] == n - 1) --pos;
    if (pos == 0) return;
    const std::size_t next = idx[pos - 1] + 1;
    for (std::size_t j = pos - 1; j < m; ++j) idx[j] = next;
  }
}

/// Symmetric kernel tensor over a fixed training set. Values are cached under
/// the sorted index multiset, so every permutation of an index tuple shares
/// one slot. The cache is filled lazily and is safe for concurrent readers
/// and writers: all writers of a slot compute the same value.
class GramTensor {
 public:
  /// Validates the kernel and every training point (DomainViolation carries
  /// the offending index). Does not evaluate any kernel entries.
  GramTensor(KernelSpec spec, std::vector<Point> points,
             std::uint64_t multiset_cap = kDefaultMultisetCap);

  GramTensor(const GramTensor&) = delete;
  GramTensor& operator=(const GramTensor&) = delete;
  GramTensor(GramTensor&&) noexcept = default;
  GramTensor& operator=(GramTensor&&) noexcept = default;

  const KernelSpec& kernel() const noexcept { return spec_; }
  const std::vector<Point>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::size_t order() const noexcept { return spec_.order; }
  std::uint64_t entry_count() const noexcept { return entries_; }

  /// K(x_{i_1}, ..., x_{i_m}) for indices in any order.
  double value(std::span<const std::size_t> indices) const;

  /// Value at the lexicographic rank of a sorted multiset.
  double value_at_rank(std::uint64_t rank, std::span<const std::size_t> sorted) const;

  /// Lexicographic rank of a sorted index multiset among all C(n+m-1, m).
  std::uint64_t rank(std::span<const std::size_t> sorted) const;

  /// Number of slots already evaluated.
  std::size_t cached_entries() const noexcept;

  /// Evaluates every slot, spreading the work over up to TKSVR_THREADS
  /// threads (default: hardware concurrency). Idempotent.
  void materialize() const;

 private:
  double compute(std::span<const std::size_t> sorted) const;

  KernelSpec spec_;
  std::vector<Point> points_;
  std::uint64_t entries_ = 0;
  std::vector<std::uint64_t> binom_;  // (N+1) x (m+1) table, N = n + m - 1
  std::unique_ptr<std::atomic<double>[]> cache_;
  std::unique_ptr<std::once_flag> materialized_;
};

/// Thread cap read from TKSVR_THREADS; falls back to hardware concurrency.
std::size_t contraction_threads() noexcept;

struct ContractionResult {
  double value = 0.0;
  std::uint64_t terms_evaluated = 0;
  std::uint64_t flops_estimate = 0;
};

/// K[u] = sum over all n^m index tuples of K(x_i1..x_im) u_i1 ... u_im,
/// evaluated over multisets with multinomial weights.
ContractionResult contract_full_detailed(const GramTensor& gram, std::span<const double> u);
double contract_full(const GramTensor& gram, std::span<const double> u);

/// Gradient of K[u]; component j is m times the degree-(m-1) contraction
/// with x_j in the last slot.
std::vector<double> contract_gradient(const GramTensor& gram, std::span<const double> u);

/// sum over (m-1)-tuples of K(x_i1, ..., x_i(m-1), x) u_i1 ... u_i(m-1), with
/// no 1/n^{m-1} scaling.
ContractionResult contract_predict_detailed(const GramTensor& gram, std::span<const double> u,
                                            PointRef x);
double contract_predict(const GramTensor& gram, std::span<const double> u, PointRef x);

}  // namespace tksvr
