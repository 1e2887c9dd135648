// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace hsrdm {

// Mean over timesteps and dimensions of the squared error.
double forecast_mse(const Eigen::Ref<const Eigen::MatrixXd>& forecast,
                    const Eigen::Ref<const Eigen::MatrixXd>& truth);

// Mean over timesteps of the Euclidean distance.
double mean_forecast_error(const Eigen::Ref<const Eigen::MatrixXd>& forecast,
                           const Eigen::Ref<const Eigen::MatrixXd>& truth);

struct SegmentationScore {
  double accuracy = 0.0;
  std::vector<int> permutation;  // predicted label -> true label
};

SegmentationScore segmentation_accuracy(const std::vector<int>& predicted,
                                        const std::vector<int>& truth, int n_states);

// System labels for models without a system chain: one-hot encode each
// entity's state (T x J matrix of labels in [0, K)), concatenate per
// timestep, and cluster the rows with k-means.
std::vector<int> cluster_entity_states(const Eigen::Ref<const Eigen::MatrixXi>& entity_states,
                                       int n_entity_states, int n_clusters, std::uint64_t seed);

// Circular variance (1 - mean resultant length) of each entity's
// first-to-last displacement direction. trajectories[j] is (u+1) x 2.
double directional_variation(const std::vector<Eigen::MatrixXd>& trajectories);

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};
inline Box unit_square() { return {Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones()}; }

// Fraction of rows (over all trajectories) with every coordinate in the box.
double pct_in_bounds(const std::vector<Eigen::MatrixXd>& trajectories, const Box& box);

struct ForecastSummary {
  double best_mse = 0.0;
  int best_trial = -1;
  double best_trial_mean = 0.0;
  double best_trial_se = 0.0;
  double median_trial_mean = 0.0;
};

// mse[trial][sample]. Best over every sample; mean and standard error over
// the samples of the trial holding the best; median over per-trial means.
ForecastSummary summarize_forecasts(const std::vector<std::vector<double>>& mse);

double median(std::vector<double> values);

}  // namespace hsrdm
