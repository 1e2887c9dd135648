// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "hsrdm/inference.hpp"
#include "hsrdm/synthetic.hpp"

namespace {

// One CAVI iteration on FigureEight-style data tiled to J entities.
void BM_CaviIteration(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  hsrdm::FigureEightConfig fc;
  fc.J = J;
  fc.T = 2000;
  fc.periods.clear();
  for (int j = 0; j < J; ++j) fc.periods.push_back(5 + 5 * (j % 8));
  const hsrdm::TimeSeriesDataset data = hsrdm::generate_figure_eight(fc).data;
  const hsrdm::ModelParams start =
      hsrdm::make_default_params(2, 4, J, 2, hsrdm::EmissionFamily::gaussian_var);
  const hsrdm::VariationalPosterior q = hsrdm::infer_posterior(start, data, 1);
  hsrdm::CaviConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(hsrdm::continue_cavi(start, data, config, 1, &q));
}
BENCHMARK(BM_CaviIteration)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_MarchingBandGeneration(benchmark::State& state) {
  hsrdm::MarchingBandConfig mc;
  for (auto _ : state) benchmark::DoNotOptimize(hsrdm::generate_marching_band(mc));
}
BENCHMARK(BM_MarchingBandGeneration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
