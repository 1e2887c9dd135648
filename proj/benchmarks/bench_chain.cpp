// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <benchmark/benchmark.h>

#include "hsrdm/chain.hpp"

namespace {

hsrdm::ChainSpec random_chain(int T, int n) {
  hsrdm::Rng rng(1);
  std::normal_distribution<double> g;
  hsrdm::ChainSpec s;
  s.n_states = n;
  s.log_init = hsrdm::log_softmax(Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); }));
  s.log_transitions = hsrdm::RowMatrixXd(T - 1, n * n);
  for (int t = 0; t + 1 < T; ++t)
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd row = hsrdm::log_softmax(Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); }));
      s.log_transitions.row(t).segment(i * n, n) = row.transpose();
    }
  s.log_emissions = Eigen::MatrixXd::NullaryExpr(T, n, [&] { return g(rng); });
  return s;
}

void BM_Smooth(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const hsrdm::ChainSpec s = random_chain(T, n);
  for (auto _ : state) benchmark::DoNotOptimize(hsrdm::smooth(s));
  state.SetComplexityN(T);
}
BENCHMARK(BM_Smooth)->ArgsProduct({{10000, 40000}, {2, 4, 8}})->Unit(benchmark::kMillisecond);

void BM_Viterbi(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const hsrdm::ChainSpec s = random_chain(T, n);
  for (auto _ : state) benchmark::DoNotOptimize(hsrdm::viterbi(s));
}
BENCHMARK(BM_Viterbi)->ArgsProduct({{10000, 40000}, {2, 4, 8}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
