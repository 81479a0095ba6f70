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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

#include "test_support.hpp"
#include "tksvr/error.hpp"

namespace tksvr {
namespace {

using testing::make_kernel;

// Brute force over all n^len ordered index tuples.
template <class Fn>
void for_each_tuple(std::size_t n, std::size_t len, Fn&& fn) {
  std::vector<std::size_t> idx(len, 0);
  while (true) {
    fn(idx);
    std::size_t pos = len;
    while (pos > 0 && ++idx[pos - 1] == n) idx[--pos] = 0;
    if (pos == 0) return;
  }
}

double naive_full(const KernelSpec& k, const std::vector<Point>& pts, const std::vector<double>& u) {
  double total = 0.0;
  for_each_tuple(pts.size(), k.order, [&](const std::vector<std::size_t>& idx) {
    std::vector<Point> args;
    double coeff = 1.0;
    for (auto i : idx) {
      args.push_back(pts[i]);
      coeff *= u[i];
    }
    total += eval_kernel(k, args) * coeff;
  });
  return total;
}

TEST(EnumerateMultisets, TwoByTwo) {
  const auto e = enumerate_multisets(2, 2);
  ASSERT_EQ(e.size(), 3U);
  EXPECT_EQ(e[0].counts, (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(e[1].counts, (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(e[2].counts, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(e[0].weight, 1.0);
  EXPECT_EQ(e[1].weight, 2.0);
  EXPECT_EQ(e[2].weight, 1.0);
}

TEST(EnumerateMultisets, SingleIndex) {
  const auto e = enumerate_multisets(1, 5);
  ASSERT_EQ(e.size(), 1U);
  EXPECT_EQ(e[0].counts, (std::vector<std::size_t>{5}));
  EXPECT_EQ(e[0].weight, 1.0);
}

TEST(EnumerateMultisets, CountsAndWeightSums) {
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::size_t m = 1; m <= 6; ++m) {
      const auto e = enumerate_multisets(n, m);
      EXPECT_EQ(e.size(), multiset_count(n, m));
      double total = 0.0;
      for (const auto& x : e) total += x.weight;
      EXPECT_EQ(total, std::pow(static_cast<double>(n), static_cast<double>(m)));
    }
  }
  EXPECT_EQ(enumerate_multisets(3, 4).size(), 15U);
}

TEST(EnumerateMultisets, Overflow) {
  try {
    enumerate_multisets(50, 6, 1000);
    FAIL() << "expected CombinatorialOverflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CombinatorialOverflow);
  }
}

TEST(GramTensor, RankMatchesEnumerationOrder) {
  std::mt19937_64 rng(1);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 4, 1);
  GramTensor g(k, testing::random_points(rng, 5, 1, 1.0));
  std::uint64_t expected = 0;
  for_each_multiset(5, 4, [&](std::span<const std::size_t> idx, double) {
    EXPECT_EQ(g.rank(idx), expected++);
  });
  EXPECT_EQ(expected, g.entry_count());
}

TEST(GramTensor, PermutedIndicesShareOneEntry) {
  std::mt19937_64 rng(2);
  const auto k = make_kernel(SeriesSpec::polynomial(3), CompositionMode::Composed, 4, 2);
  const auto pts = testing::random_points(rng, 4, 2, 1.0);
  GramTensor g(k, pts);
  EXPECT_EQ(g.cached_entries(), 0U);
  const std::vector<std::size_t> a{3, 0, 2, 0}, b{0, 2, 0, 3};
  const double va = g.value(a);
  EXPECT_EQ(g.cached_entries(), 1U);
  EXPECT_EQ(g.value(b), va);
  EXPECT_EQ(g.cached_entries(), 1U);
  EXPECT_EQ(va, eval_kernel(k, std::vector<Point>{pts[3], pts[0], pts[2], pts[0]}));
}

TEST(GramTensor, CacheSizeBoundedByMultisetCount) {
  std::mt19937_64 rng(3);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Product, 4, 2);
  GramTensor g(k, testing::random_points(rng, 6, 2, 1.0));
  contract_full(g, testing::random_vector(rng, 6, 1.0));
  EXPECT_LE(g.cached_entries(), multiset_count(6, 4));
  EXPECT_EQ(g.cached_entries(), g.entry_count());
}

TEST(GramTensor, RejectsOutOfDomainPointWithIndex) {
  const auto k = make_kernel(SeriesSpec::geometric(), CompositionMode::Composed, 2, 2);
  try {
    GramTensor g(k, {{0.1, 0.1}, {0.2, 0.2}, {0.8, 0.8}});
    FAIL() << "expected DomainViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DomainViolation);
    EXPECT_EQ(e.index(), 2U);
  }
}

TEST(GramTensor, CapRefusesHugeTensors) {
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 6, 1);
  std::vector<Point> pts(200, Point{0.1});
  EXPECT_THROW(GramTensor(k, pts), Error);
}

TEST(ContractFull, ZeroVector) {
  std::mt19937_64 rng(4);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 4, 2);
  GramTensor g(k, testing::random_points(rng, 4, 2, 1.0));
  EXPECT_EQ(contract_full(g, std::vector<double>(4, 0.0)), 0.0);
}

TEST(ContractFull, SinglePointHomogeneity) {
  const auto k = make_kernel(SeriesSpec::binomial(1.5), CompositionMode::Composed, 4, 2);
  const Point x{0.3, -0.5};
  GramTensor g(k, {x});
  const double t = -1.7;
  EXPECT_NEAR(contract_full(g, std::vector<double>{t}), std::pow(t, 4) * eval_diagonal(k, x),
              1e-14);
}

TEST(ContractFull, MatchesNaiveEightyOneTermSum) {
  std::mt19937_64 rng(5);
  const auto k = make_kernel(SeriesSpec::polynomial(2), CompositionMode::Composed, 4, 2);
  const auto pts = testing::random_points(rng, 3, 2, 1.0);
  GramTensor g(k, pts);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = testing::random_vector(rng, 3, 1.0);
    const double naive = naive_full(k, pts, u);
    EXPECT_NEAR(contract_full(g, u), naive, 1e-12 * std::max(1.0, std::abs(naive)));
  }
  const auto r = contract_full_detailed(g, testing::random_vector(rng, 3, 1.0));
  EXPECT_EQ(r.terms_evaluated, 15U);
  EXPECT_GT(r.flops_estimate, r.terms_evaluated);
}

TEST(ContractFull, DimensionMismatch) {
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 2, 1);
  GramTensor g(k, {{0.1}, {0.2}});
  try {
    contract_full(g, std::vector<double>{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(ContractFull, HomogeneityAndPositivity) {
  std::mt19937_64 rng(6);
  for (std::size_t m : {2U, 4U}) {
    for (const auto& k : testing::builtin_kernels(m, 2)) {
      GramTensor g(k, testing::random_domain_points(rng, k, 4));
      for (int trial = 0; trial < 10; ++trial) {
        const auto u = testing::random_vector(rng, 4, 2.0);
        const double base = contract_full(g, u);
        EXPECT_GE(base, 0.0 - 1e-10 * std::abs(base));
        for (double lambda : {-1.0, 0.5, -3.0}) {
          std::vector<double> scaled(u);
          for (auto& v : scaled) v *= lambda;
          const double expect = std::pow(lambda, static_cast<double>(m)) * base;
          EXPECT_NEAR(contract_full(g, scaled), expect, 1e-12 * std::max(1.0, std::abs(expect)));
        }
      }
    }
  }
}

TEST(ContractGradient, ZeroVector) {
  std::mt19937_64 rng(7);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 4, 2);
  GramTensor g(k, testing::random_points(rng, 3, 2, 1.0));
  for (double v : contract_gradient(g, std::vector<double>(3, 0.0))) EXPECT_EQ(v, 0.0);
}

TEST(ContractGradient, CentralFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (std::size_t m : {2U, 4U, 6U}) {
    const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, m, 2);
    GramTensor g(k, testing::random_points(rng, 4, 2, 0.8));
    const auto u = testing::random_vector(rng, 4, 1.0);
    const auto grad = contract_gradient(g, u);
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double h = 1e-5 * (1.0 + std::abs(u[j]));
      auto up = u, down = u;
      up[j] += h;
      down[j] -= h;
      const double fd = (contract_full(g, up) - contract_full(g, down)) / (2.0 * h);
      EXPECT_LE(std::abs(fd - grad[j]), 1e-6 * std::max(1.0, std::abs(grad[j])))
          << "m=" << m << " j=" << j;
    }
  }
}

TEST(ContractGradient, EulerIdentity) {
  std::mt19937_64 rng(9);
  for (std::size_t m : {2U, 4U, 6U}) {
    const auto k = make_kernel(SeriesSpec::bergman_like(), CompositionMode::Product, m, 2);
    GramTensor g(k, testing::random_domain_points(rng, k, 5));
    const auto u = testing::random_vector(rng, 5, 1.0);
    const auto grad = contract_gradient(g, u);
    double dot = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) dot += grad[j] * u[j];
    const double full = static_cast<double>(m) * contract_full(g, u);
    EXPECT_NEAR(dot, full, 1e-10 * std::max(1.0, std::abs(full)));
  }
}

TEST(ContractGradient, EqualsOrderTimesPredictContraction) {
  std::mt19937_64 rng(10);
  const auto k = make_kernel(SeriesSpec::polynomial(3), CompositionMode::Composed, 4, 2);
  const auto pts = testing::random_points(rng, 4, 2, 1.0);
  GramTensor g(k, pts);
  const auto u = testing::random_vector(rng, 4, 1.0);
  const auto grad = contract_gradient(g, u);
  for (std::size_t j = 0; j < pts.size(); ++j) {
    EXPECT_NEAR(grad[j], 4.0 * contract_predict(g, u, pts[j]), 1e-12 * std::abs(grad[j]) + 1e-14);
  }
}

TEST(ContractPredict, ZeroVectorAndSinglePoint) {
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 4, 1);
  GramTensor g(k, {{0.4}});
  EXPECT_EQ(contract_predict(g, std::vector<double>{0.0}, Point{0.3}), 0.0);
  EXPECT_EQ(contract_predict(g, std::vector<double>{1.0}, Point{0.4}),
            eval_diagonal(k, Point{0.4}));
}

TEST(ContractPredict, TwoPointOrderTwoExpansion) {
  const auto k = make_kernel(SeriesSpec::polynomial(2), CompositionMode::Composed, 2, 2);
  const std::vector<Point> pts{{0.5, -1.0}, {2.0, 0.25}};
  GramTensor g(k, pts);
  const std::vector<double> u{0.75, -1.5};
  const Point x{1.0, 2.0};
  // K(a, x) = (1 + <a, x>)^2
  const double k1 = std::pow(1.0 + 0.5 - 2.0, 2), k2 = std::pow(1.0 + 2.0 + 0.5, 2);
  EXPECT_NEAR(contract_predict(g, u, x), 0.75 * k1 - 1.5 * k2, 1e-14);
}

TEST(ContractPredict, DomainViolation) {
  const auto k = make_kernel(SeriesSpec::geometric(), CompositionMode::Product, 2, 1);
  GramTensor g(k, {{0.5}});
  try {
    contract_predict(g, std::vector<double>{1.0}, Point{1.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DomainViolation);
  }
}

TEST(Contraction, ThreadCountDoesNotChangeResults) {
  std::mt19937_64 rng(11);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 4, 3);
  const auto pts = testing::random_points(rng, 12, 3, 1.0);
  const auto u = testing::random_vector(rng, 12, 1.0);
  ::setenv("TKSVR_THREADS", "1", 1);
  GramTensor serial(k, pts);
  const double a = contract_full(serial, u);
  const auto ga = contract_gradient(serial, u);
  ::setenv("TKSVR_THREADS", "4", 1);
  GramTensor parallel(k, pts);
  const double b = contract_full(parallel, u);
  const auto gb = contract_gradient(parallel, u);
  ::unsetenv("TKSVR_THREADS");
  EXPECT_EQ(a, b);
  EXPECT_EQ(ga, gb);
}

}  // namespace
}  // namespace tksvr
