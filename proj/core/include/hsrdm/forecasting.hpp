// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "hsrdm/inference.hpp"

namespace hsrdm {

// Forecast of target entities over [begin, end] (inclusive, global
// timesteps) given everything else in the dataset.
struct ForecastRequest {
  std::vector<int> target_entities;
  int begin = 0;
  int end = 0;
  int n_samples = 5;
  std::uint64_t seed = 120;
  bool sample_system_path = false;  // draw s per sample instead of Viterbi
  bool refit = false;               // rerun CAVI on the masked data first
  int context_rounds = 3;           // alternations of VEZ / VES on the context

  void validate(const TimeSeriesDataset& data) const;
  int length() const { return end - begin + 1; }
};

struct ForecastResult {
  std::vector<int> target_entities;
  int begin = 0;
  int end = 0;
  std::vector<int> system_path;  // decoded s over the horizon (Viterbi)
  // samples[n][i]: (end - begin + 1) x D trajectory of target_entities[i]
  std::vector<std::vector<Eigen::MatrixXd>> samples;
};

// Variational posterior mean of entity j over [begin, end] started from the
// observed x_{begin-1}. `q_z` covers the whole dataset.
Eigen::MatrixXd posterior_mean_fit(const ModelParams& params, const TimeSeriesDataset& data,
                                   const ChainPosterior& q_z, int entity, int begin, int end);

ForecastResult partial_forecast(const ModelParams& params, const TimeSeriesDataset& data,
                                const ForecastRequest& request, const CaviConfig& fit_config);

}  // namespace hsrdm
