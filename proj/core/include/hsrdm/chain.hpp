// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hsrdm/core_math.hpp"

namespace hsrdm {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A single time-inhomogeneous chain in log space. Row t of log_transitions
// holds the n x n matrix for the step t -> t+1 flattened row-major, so
// entry (t, i * n + j) = log A_t(i, j).
//
// Example boundaries are encoded by the builder: a transition into an
// example start repeats the initial distribution in every row, and the
// emission row carries the initial-emission term.
struct ChainSpec {
  int n_states = 0;
  Eigen::VectorXd log_init;      // n
  RowMatrixXd log_transitions;   // (T-1) x n*n
  Eigen::MatrixXd log_emissions; // T x n

  int length() const { return static_cast<int>(log_emissions.rows()); }
  double log_transition(int t, int from, int to) const {
    return log_transitions(t, from * n_states + to);
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  transition_matrix(int t) const {
    return {log_transitions.row(t).data(), n_states, n_states};
  }

  // Shapes and finiteness; with require_normalized also every row and the
  // init vector must exponentiate to probability vectors.
  void validate(bool require_normalized = true) const;
};

struct FilterResult {
  Eigen::MatrixXd filtered;       // T x n, p(z_t | x_{0:t})
  Eigen::MatrixXd predicted;      // T x n, p(z_t | x_{0:t-1}) (row 0 = init)
  Eigen::MatrixXd log_filtered;
  Eigen::MatrixXd log_predicted;  // unnormalized time-update, used by smooth
  double log_normalizer = 0.0;
};

struct ChainPosterior {
  Eigen::MatrixXd unary;  // T x n
  RowMatrixXd pairwise;   // (T-1) x n*n, entry (t, i*n+j) = q(z_t=i, z_{t+1}=j)
  double log_normalizer = 0.0;

  int length() const { return static_cast<int>(unary.rows()); }
  int n_states() const { return static_cast<int>(unary.cols()); }
  double pair(int t, int i, int j) const { return pairwise(t, i * n_states() + j); }
};

// Throws "ImpossibleEvidence" when all mass vanishes at some step.
FilterResult filter(const ChainSpec& spec);
ChainPosterior smooth(const ChainSpec& spec);
ChainPosterior smooth(const ChainSpec& spec, const FilterResult& filtered);

double chain_entropy(const ChainPosterior& post);

// Most probable path; ties resolve to the lower state index.
std::vector<int> viterbi(const ChainSpec& spec);

// Ancestral draw from (init, transitions), ignoring emissions.
std::vector<int> sample_chain(const ChainSpec& spec, Rng& rng);
// Draw from the posterior over paths (forward filter, backward sample).
std::vector<int> sample_posterior_path(const ChainSpec& spec, Rng& rng);

// log init + transitions + emissions along a path.
double path_log_prob(const ChainSpec& spec, const std::vector<int>& path);

// One-hot posterior for a single state chain of the given length.
ChainPosterior degenerate_posterior(int T);

}  // namespace hsrdm
