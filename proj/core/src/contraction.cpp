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

#include "tksvr/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "tksvr/error.hpp"

namespace tksvr {
namespace {

const double kEmpty = std::numeric_limits<double>::quiet_NaN();

void require_length(const GramTensor& gram, std::span<const double> u) {
  if (u.size() != gram.size()) {
    throw Error(Errc::DimensionMismatch, "coefficient vector has length " +
                                             std::to_string(u.size()) + ", expected " +
                                             std::to_string(gram.size()));
  }
}

double monomial(std::span<const std::size_t> idx, std::span<const double> u) {
  double p = 1.0;
  for (auto i : idx) p *= u[i];
  return p;
}

}  // namespace

std::uint64_t multiset_count(std::size_t n, std::size_t m) {
  if (n == 0) return m == 0 ? 1 : 0;
  return binomial(n + m - 1, m);
}

std::vector<MultisetEntry> enumerate_multisets(std::size_t n, std::size_t m, std::uint64_t cap) {
  if (n < 1 || m < 1) throw Error(Errc::InvalidArgument, "enumerate_multisets needs n, m >= 1");
  const auto count = multiset_count(n, m);
  if (count > cap) {
    throw Error(Errc::CombinatorialOverflow,
                std::to_string(count) + " multisets exceed the cap of " + std::to_string(cap));
  }
  std::vector<MultisetEntry> out;
  out.reserve(static_cast<std::size_t>(count));
  for_each_multiset(n, m, [&](std::span<const std::size_t> idx, double w) {
    MultisetEntry e;
    e.counts.assign(n, 0);
    for (auto i : idx) ++e.counts[i];
    e.weight = w;
    out.push_back(std::move(e));
  });
  return out;
}

std::size_t contraction_threads() noexcept {
  std::size_t hw = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TKSVR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<std::size_t>(v);
  }
  return hw;
}

// --- GramTensor --------------------------------------------------------------

GramTensor::GramTensor(KernelSpec spec, std::vector<Point> points, std::uint64_t multiset_cap)
    : spec_(std::move(spec)), points_(std::move(points)) {
  spec_.validate();
  if (points_.empty()) throw Error(Errc::InvalidArgument, "GramTensor needs at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].size() != spec_.dim) {
      throw Error(Errc::DimensionMismatch,
                  "point " + std::to_string(i) + " has dimension " +
                      std::to_string(points_[i].size()) + ", expected " + std::to_string(spec_.dim),
                  i);
    }
    if (!check_domain(spec_, points_[i]).passed) {
      throw Error(Errc::DomainViolation,
                  "point " + std::to_string(i) + " lies outside the kernel's convergence region", i);
    }
  }
  const std::size_t n = points_.size();
  const std::size_t m = spec_.order;
  entries_ = multiset_count(n, m);
  if (entries_ > multiset_cap) {
    throw Error(Errc::CombinatorialOverflow,
                "n = " + std::to_string(n) + ", m = " + std::to_string(m) + " needs " +
                    std::to_string(entries_) + " kernel entries, cap is " +
                    std::to_string(multiset_cap));
  }
  const std::size_t big_n = n + m - 1;
  binom_.assign((big_n + 1) * (m + 1), 0);
  for (std::size_t a = 0; a <= big_n; ++a) {
    for (std::size_t b = 0; b <= std::min(a, m); ++b) {
      binom_[a * (m + 1) + b] = binomial(a, b);
    }
  }
  cache_ = std::make_unique<std::atomic<double>[]>(static_cast<std::size_t>(entries_));
  for (std::uint64_t i = 0; i < entries_; ++i) cache_[i].store(kEmpty, std::memory_order_relaxed);
  materialized_ = std::make_unique<std::once_flag>();
}

std::uint64_t GramTensor::rank(std::span<const std::size_t> sorted) const {
  const std::size_t m = spec_.order;
  const std::size_t big_n = points_.size() + m - 1;
  auto c = [&](std::size_t a, std::size_t b) { return binom_[a * (m + 1) + b]; };
  std::uint64_t r = 0;
  // Shift to a strictly increasing combination over {0..N-1} and rank it
  // with the hockey-stick identity.
  std::size_t prev_plus_one = 0;  // prev + 1, with prev = -1 initially
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t ck = sorted[k] + k;
    const std::size_t j = m - 1 - k;
    r += c(big_n - prev_plus_one, j + 1) - c(big_n - ck, j + 1);
    prev_plus_one = ck + 1;
  }
  return r;
}

double GramTensor::compute(std::span<const std::size_t> sorted) const {
  std::vector<PointRef> refs;
  refs.reserve(sorted.size());
  for (auto i : sorted) refs.emplace_back(points_[i]);
  return detail::eval_kernel_unchecked(spec_, refs);
}

double GramTensor::value_at_rank(std::uint64_t r, std::span<const std::size_t> sorted) const {
  double v = cache_[r].load(std::memory_order_relaxed);
  if (std::isnan(v)) {
    v = compute(sorted);
    cache_[r].store(v, std::memory_order_relaxed);
  }
  return v;
}

double GramTensor::value(std::span<const std::size_t> indices) const {
  if (indices.size() != spec_.order) {
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(spec_.order) + " indices");
  }
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() >= points_.size()) {
    throw Error(Errc::DimensionMismatch, "index out of range");
  }
  return value_at_rank(rank(sorted), sorted);
}

std::size_t GramTensor::cached_entries() const noexcept {
  std::size_t count = 0;
  for (std::uint64_t i = 0; i < entries_; ++i) {
    if (!std::isnan(cache_[i].load(std::memory_order_relaxed))) ++count;
  }
  return count;
}

void GramTensor::materialize() const {
  std::call_once(*materialized_, [this] {
    const std::size_t n = points_.size();
    const std::size_t m = spec_.order;
    const std::size_t threads =
        std::min<std::uint64_t>(contraction_threads(), std::max<std::uint64_t>(1, entries_ / 256));
    if (threads <= 1) {
      std::uint64_t r = 0;
      for_each_multiset(n, m, [&](std::span<const std::size_t> idx, double) {
        value_at_rank(r++, idx);
      });
      return;
    }
    // Each worker walks the full enumeration but only evaluates ranks in its
    // stride; walking is cheap next to kernel evaluation.
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        std::uint64_t r = 0;
        for_each_multiset(n, m, [&](std::span<const std::size_t> idx, double) {
          if (r % threads == t) value_at_rank(r, idx);
          ++r;
        });
      });
    }
    for (auto& th : pool) th.join();
  });
}

// --- Contractions ------------------------------------------------------------

ContractionResult contract_full_detailed(const GramTensor& gram, std::span<const double> u) {
  require_length(gram, u);
  gram.materialize();
  CompensatedSum sum;
  std::uint64_t r = 0;
  for_each_multiset(gram.size(), gram.order(), [&](std::span<const std::size_t> idx, double w) {
    sum.add(w * gram.value_at_rank(r++, idx) * monomial(idx, u));
  });
  ContractionResult out;
  out.value = sum.value();
  out.terms_evaluated = r;
  out.flops_estimate = r * (gram.order() + 3);
  return out;
}

double contract_full(const GramTensor& gram, std::span<const double> u) {
  return contract_full_detailed(gram, u).value;
}

std::vector<double> contract_gradient(const GramTensor& gram, std::span<const double> u) {
  require_length(gram, u);
  gram.materialize();
  const std::size_t n = gram.size();
  const std::size_t m = gram.order();
  std::vector<CompensatedSum> acc(n);
  std::uint64_t r = 0;
  for_each_multiset(n, m, [&](std::span<const std::size_t> idx, double w) {
    const double scaled = w * gram.value_at_rank(r++, idx);
    // d/du_j of prod_k u_{i_k} = alpha_j * prod over all slots but one copy of j.
    std::size_t k = 0;
    while (k < m) {
      std::size_t end = k;
      while (end < m && idx[end] == idx[k]) ++end;
      double rest = 1.0;
      for (std::size_t s = 0; s < m; ++s) {
        if (s != k) rest *= u[idx[s]];
      }
      acc[idx[k]].add(scaled * static_cast<double>(end - k) * rest);
      k = end;
    }
  });
  std::vector<double> grad(n);
  for (std::size_t j = 0; j < n; ++j) grad[j] = acc[j].value();
  return grad;
}

ContractionResult contract_predict_detailed(const GramTensor& gram, std::span<const double> u,
                                            PointRef x) {
  require_length(gram, u);
  const auto& spec = gram.kernel();
  if (x.size() != spec.dim) {
    throw Error(Errc::DimensionMismatch, "query point has dimension " + std::to_string(x.size()) +
                                             ", expected " + std::to_string(spec.dim));
  }
  if (!check_domain(spec, x).passed) {
    throw Error(Errc::DomainViolation, "query point outside the kernel's convergence region");
  }
  const std::size_t m = gram.order();
  const auto& points = gram.points();
  CompensatedSum sum;
  std::uint64_t terms = 0;
  std::vector<PointRef> refs(m);
  for_each_multiset(gram.size(), m - 1, [&](std::span<const std::size_t> idx, double w) {
    for (std::size_t k = 0; k + 1 < m; ++k) refs[k] = points[idx[k]];
    refs[m - 1] = x;
    sum.add(w * detail::eval_kernel_unchecked(spec, refs) * monomial(idx, u));
    ++terms;
  });
  ContractionResult out;
  out.value = sum.value();
  out.terms_evaluated = terms;
  out.flops_estimate = terms * (m * spec.dim + m + 3);
  return out;
}

double contract_predict(const GramTensor& gram, std::span<const double> u, PointRef x) {
  return contract_predict_detailed(gram, u, x).value;
}

}  // namespace tksvr
