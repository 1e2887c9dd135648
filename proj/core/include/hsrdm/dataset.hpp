// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hsrdm {

using ObservedMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Observations for J entities over T_total stacked timesteps. Several
// independent examples may be concatenated; example_end_times holds the
// exclusive end index of each, the last equal to T_total.
struct TimeSeriesDataset {
  std::vector<Eigen::MatrixXd> observations;   // J entries, each T x D
  std::vector<int> example_end_times;
  Eigen::MatrixXd system_covariates;           // T x d_us, or empty
  std::vector<Eigen::MatrixXd> entity_covariates;  // J entries T x d_ue, or empty
  ObservedMask observed;                       // T x J, empty = all observed

  int num_timesteps() const {
    return observations.empty() ? 0 : static_cast<int>(observations.front().rows());
  }
  int num_entities() const { return static_cast<int>(observations.size()); }
  int obs_dim() const {
    return observations.empty() ? 0 : static_cast<int>(observations.front().cols());
  }
  int num_examples() const { return static_cast<int>(example_end_times.size()); }
  int system_covariate_dim() const { return static_cast<int>(system_covariates.cols()); }
  int entity_covariate_dim() const {
    return entity_covariates.empty() ? 0 : static_cast<int>(entity_covariates.front().cols());
  }

  bool has_mask() const { return observed.size() > 0; }
  bool is_observed(int t, int j) const { return !has_mask() || observed(t, j); }

  // Per-timestep flag: true at the first timestep of each example.
  std::vector<char> example_starts() const;
  int example_start_of(int t) const;
  int example_end_of(int t) const;  // exclusive

  // Throws "EmptyDataset", "NonFiniteObservation", "InvalidExampleEnds" or
  // "FeatureDimMismatch".
  void validate() const;

  // Single example covering [begin, end) of example-aligned timesteps.
  TimeSeriesDataset slice(int begin, int end) const;
};

// Entity-major copy with masked entries replaced by the last observed value
// of that entity within the same example (or the next observed value when
// nothing precedes them).
TimeSeriesDataset impute_carry_forward(const TimeSeriesDataset& data);

// Convenience constructor for a single example.
TimeSeriesDataset make_dataset(std::vector<Eigen::MatrixXd> observations,
                               std::vector<int> example_end_times = {});

}  // namespace hsrdm
