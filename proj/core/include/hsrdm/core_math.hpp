// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

namespace hsrdm {

using Rng = std::mt19937_64;

// Probability vector (entries >= 0, sum 1).
using ProbVector = Eigen::VectorXd;
// Row-stochastic matrix stored as log-probabilities.
using LogTPM = Eigen::MatrixXd;

inline constexpr double kSimplexTol = 1e-9;

// Deterministic 64-bit mixing of a base seed with a stream index, used to
// derive independent per-entity / per-sample RNG streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

double logsumexp(const Eigen::Ref<const Eigen::VectorXd>& v);

// Throws "NonFiniteUtility" on NaN/inf input.
Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& utilities);

// Normalizes each row of a log-potential matrix into log-probabilities.
LogTPM normalize_log_rows(const Eigen::Ref<const Eigen::MatrixXd>& log_potentials);

bool is_prob_vector(const Eigen::Ref<const Eigen::VectorXd>& p,
                    double tol = kSimplexTol);

// Wraps an angle into [-pi, pi).
double wrap_angle(double radians);

// Draws an index with probability proportional to exp(log_weights).
int sample_log_categorical(const Eigen::Ref<const Eigen::VectorXd>& log_weights, Rng& rng);

struct StickyDirichletPrior {
  double alpha = 1.0;
  double kappa = 10.0;
  int n = 1;

  void validate() const;
  // Concentration vector for the row whose self-transition is self_index.
  Eigen::VectorXd concentration(int self_index) const;
};

double dirichlet_log_density(const Eigen::Ref<const Eigen::VectorXd>& concentration,
                             const Eigen::Ref<const Eigen::VectorXd>& point);

// Full log density including the normalizing constant. Throws
// "BoundarySimplexPoint" if any entry of row is zero.
double sticky_dirichlet_log_density(const StickyDirichletPrior& prior,
                                    const Eigen::Ref<const Eigen::VectorXd>& row,
                                    int self_index);

// Normalized independent Gamma draws.
Eigen::VectorXd sample_dirichlet(const Eigen::Ref<const Eigen::VectorXd>& concentration,
                                 Rng& rng);
Eigen::VectorXd sample_sticky_dirichlet(const StickyDirichletPrior& prior,
                                        int self_index, Rng& rng);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;              // k x d
  double objective = 0.0;               // sum of squared distances
  std::vector<double> objective_trace;  // per Lloyd iteration, best restart
};

// k-means++ seeding, `restarts` independent runs, best objective kept.
// Throws "TooFewPoints" when k exceeds the number of points.
KMeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, int k,
                    std::uint64_t seed, int restarts = 10,
                    int max_iterations = 300);

// Returns perm with perm[row] = assigned column, maximizing
// sum_i confusion(i, perm[i]). Throws "NonSquareConfusion".
std::vector<int> munkres_align(const Eigen::Ref<const Eigen::MatrixXd>& confusion);

}  // namespace hsrdm
