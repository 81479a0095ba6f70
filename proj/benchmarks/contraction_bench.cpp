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

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "tksvr/contraction.hpp"
#include "tksvr/dual_solver.hpp"

namespace {

using tksvr::GramTensor;
using tksvr::KernelSpec;
using tksvr::Point;

KernelSpec exp_kernel(std::size_t m, std::size_t d) {
  KernelSpec k;
  k.order = m;
  k.dim = d;
  return k;
}

std::vector<Point> points(std::size_t n, std::size_t d) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  std::vector<Point> pts(n, Point(d));
  for (auto& p : pts)
    for (auto& v : p) v = dist(rng);
  return pts;
}

std::vector<double> vec(std::size_t n) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u(n);
  for (auto& v : u) v = dist(rng);
  return u;
}

// Cold: includes every kernel evaluation.
void BM_ContractFullCold(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  const auto pts = points(n, 3);
  const auto u = vec(n);
  for (auto _ : state) {
    GramTensor g(exp_kernel(m, 3), pts);
    benchmark::DoNotOptimize(tksvr::contract_full(g, u));
  }
  state.counters["entries"] = static_cast<double>(tksvr::multiset_count(n, m));
}
BENCHMARK(BM_ContractFullCold)->Args({20, 2})->Args({20, 4})->Args({40, 4})->Args({12, 6});

// Warm: cache already filled, measures the multiset sweep alone.
void BM_ContractFullWarm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  GramTensor g(exp_kernel(m, 3), points(n, 3));
  g.materialize();
  const auto u = vec(n);
  for (auto _ : state) benchmark::DoNotOptimize(tksvr::contract_full(g, u));
}
BENCHMARK(BM_ContractFullWarm)->Args({20, 4})->Args({40, 4})->Args({12, 6});

void BM_ContractGradientWarm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  GramTensor g(exp_kernel(4, 3), points(n, 3));
  g.materialize();
  const auto u = vec(n);
  for (auto _ : state) benchmark::DoNotOptimize(tksvr::contract_gradient(g, u));
}
BENCHMARK(BM_ContractGradientWarm)->Arg(10)->Arg(20)->Arg(40);

void BM_ContractPredict(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  GramTensor g(exp_kernel(4, 3), points(n, 3));
  const auto u = vec(n);
  const Point x{0.1, -0.2, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(tksvr::contract_predict(g, u, x));
}
BENCHMARK(BM_ContractPredict)->Arg(10)->Arg(20)->Arg(40);

void BM_SolveSquare(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  auto gram = std::make_shared<const GramTensor>(exp_kernel(m, 3), points(n, 3));
  const tksvr::DualProblem p(gram, vec(n), tksvr::LossSpec::square(), 1.0,
                             tksvr::OffsetMode::WithOffset);
  for (auto _ : state) benchmark::DoNotOptimize(tksvr::solve(p).objective);
}
BENCHMARK(BM_SolveSquare)->Args({20, 2})->Args({10, 4})->Args({20, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
