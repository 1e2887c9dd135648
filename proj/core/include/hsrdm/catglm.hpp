// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hsrdm/core_math.hpp"

namespace hsrdm {

// Weighted data for one Cat-GLM transition block: utilities for next state
// k' given previous state k and features f are log_tpm(k, k') + W(k', :) f.
// Each point carries nonnegative expected counts over next states. Prior
// pseudo-counts act on softmax rows of log_tpm alone (features = 0) and may
// be negative.
struct CatGlmData {
  int n_states = 0;
  int feature_dim = 0;
  std::vector<int> prev;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> features;  // N x d
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> counts;    // N x n
  Eigen::MatrixXd prior_counts;  // n x n, may be empty

  int size() const { return static_cast<int>(prev.size()); }
};

struct CatGlmOptions {
  int max_iterations = 50;
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  int max_line_search = 30;
  double absolute_tolerance = 1e-6;  // stop once a step gains less than this
};

struct CatGlmResult {
  LogTPM log_tpm;
  Eigen::MatrixXd weights;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool line_search_failed = false;
};

double catglm_objective(const CatGlmData& data, const LogTPM& log_tpm,
                        const Eigen::MatrixXd& weights);

// Damped Newton ascent with Armijo backtracking. The returned objective is
// never below the starting one; rows of log_tpm come back normalized.
CatGlmResult fit_catglm(const CatGlmData& data, const LogTPM& log_tpm,
                        const Eigen::MatrixXd& weights, const CatGlmOptions& options);

}  // namespace hsrdm
