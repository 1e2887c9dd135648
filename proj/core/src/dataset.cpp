// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/dataset.hpp"

#include <algorithm>

#include "hsrdm/error.hpp"

namespace hsrdm {

std::vector<char> TimeSeriesDataset::example_starts() const {
  std::vector<char> starts(num_timesteps(), 0);
  if (starts.empty()) return starts;
  starts[0] = 1;
  for (int e : example_end_times)
    if (e < num_timesteps()) starts[e] = 1;
  return starts;
}

int TimeSeriesDataset::example_start_of(int t) const {
  int start = 0;
  for (int e : example_end_times) {
    if (t < e) return start;
    start = e;
  }
  return start;
}

int TimeSeriesDataset::example_end_of(int t) const {
  for (int e : example_end_times)
    if (t < e) return e;
  return num_timesteps();
}

void TimeSeriesDataset::validate() const {
  if (observations.empty() || num_timesteps() == 0 || obs_dim() == 0)
    throw Error("EmptyDataset");
  const int T = num_timesteps();
  const int D = obs_dim();
  for (const auto& x : observations) {
    if (x.rows() != T || x.cols() != D)
      throw Error("FeatureDimMismatch", "entities disagree on T or D");
    if (!x.allFinite()) throw Error("NonFiniteObservation");
  }
  if (example_end_times.empty() || example_end_times.back() != T)
    throw Error("InvalidExampleEnds", "last end time must equal T_total");
  int prev = 0;
  for (int e : example_end_times) {
    if (e <= prev) throw Error("InvalidExampleEnds", "end times must be strictly increasing");
    prev = e;
  }
  if (system_covariates.size() > 0 && system_covariates.rows() != T)
    throw Error("FeatureDimMismatch", "system covariates need T rows");
  if (!entity_covariates.empty()) {
    if (static_cast<int>(entity_covariates.size()) != num_entities())
      throw Error("FeatureDimMismatch", "entity covariates need one block per entity");
    for (const auto& u : entity_covariates)
      if (u.rows() != T || u.cols() != entity_covariate_dim())
        throw Error("FeatureDimMismatch", "entity covariate block shape");
  }
  if (has_mask() && (observed.rows() != T || observed.cols() != num_entities()))
    throw Error("FeatureDimMismatch", "observed mask must be T x J");
}

TimeSeriesDataset TimeSeriesDataset::slice(int begin, int end) const {
  TimeSeriesDataset out;
  const int n = end - begin;
  for (const auto& x : observations) out.observations.push_back(x.middleRows(begin, n));
  out.example_end_times.push_back(n);
  if (system_covariates.size() > 0) out.system_covariates = system_covariates.middleRows(begin, n);
  for (const auto& u : entity_covariates) out.entity_covariates.push_back(u.middleRows(begin, n));
  if (has_mask()) out.observed = observed.middleRows(begin, n);
  return out;
}

TimeSeriesDataset impute_carry_forward(const TimeSeriesDataset& data) {
  TimeSeriesDataset out = data;
  if (!data.has_mask()) return out;
  const int T = data.num_timesteps();
  for (int j = 0; j < data.num_entities(); ++j) {
    auto& x = out.observations[j];
    int t = 0;
    while (t < T) {
      const int end = data.example_end_of(t);
      int last = -1;
      for (int s = t; s < end; ++s) {
        if (data.observed(s, j)) {
          last = s;
        } else if (last >= 0) {
          x.row(s) = x.row(last);
        }
      }
      // leading gap: back-fill from the first observed step
      int first = -1;
      for (int s = t; s < end; ++s)
        if (data.observed(s, j)) {
          first = s;
          break;
        }
      if (first > t)
        for (int s = t; s < first; ++s) x.row(s) = x.row(first);
      t = end;
    }
  }
  return out;
}

TimeSeriesDataset make_dataset(std::vector<Eigen::MatrixXd> observations,
                               std::vector<int> example_end_times) {
  TimeSeriesDataset d;
  d.observations = std::move(observations);
  if (example_end_times.empty()) example_end_times.push_back(d.num_timesteps());
  d.example_end_times = std::move(example_end_times);
  return d;
}

}  // namespace hsrdm
