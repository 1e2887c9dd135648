// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "hsrdm/core_math.hpp"
#include "hsrdm/dataset.hpp"
#include "hsrdm/emissions.hpp"
#include "hsrdm/transitions.hpp"

namespace hsrdm {

struct InitParams {
  ProbVector pi_s;                 // L
  std::vector<ProbVector> pi_z;    // J entries of size K
  std::vector<std::vector<InitialEmissionParams>> emissions;  // [j][k]
};

// Hyperparameters of the point-estimate priors used in the M step.
struct PriorConfig {
  double alpha = 1.0;               // sticky Dirichlet base concentration
  double kappa = 10.0;              // sticky self-transition bonus
  double init_concentration = 10.0; // symmetric Dirichlet on pi_s, pi_z
};

struct ModelParams {
  int L = 1;
  int K = 1;
  int J = 1;
  int D = 1;
  EmissionFamily family = EmissionFamily::gaussian_var;
  RecurrenceSpec system_recurrence;
  RecurrenceSpec entity_recurrence;
  PriorConfig prior;

  SystemTransitionParams system;
  EntityTransitionParams entity;
  std::vector<std::vector<EmissionParams>> emissions;  // [j][k]
  InitParams init;

  int system_feature_dim() const { return recurrence_dim(system_recurrence, true, J, D); }
  int entity_feature_dim() const { return recurrence_dim(entity_recurrence, false, J, D); }

  // Shapes and component invariants.
  void validate() const;
};

// Uniform TPMs, zero recurrence weights, identity-ish emissions.
ModelParams make_default_params(int L, int K, int J, int D, EmissionFamily family,
                                RecurrenceSpec system_recurrence = {},
                                RecurrenceSpec entity_recurrence = {});

struct LatentTrajectories {
  std::vector<int> system_states;   // T
  Eigen::MatrixXi entity_states;    // T x J
};

// Whether entity j contributes its transition and emission terms at t: both
// x_{t-1} and x_t must be observed (only x_t at an example start, where the
// terms are the initial-emission density; the initial state term is always
// kept). Inactive terms are dropped from every objective.
inline bool entity_term_active(const TimeSeriesDataset& d, int t, int j, bool boundary) {
  return boundary ? d.is_observed(t, j) : d.is_observed(t, j) && d.is_observed(t - 1, j);
}

double complete_data_log_prob(const ModelParams& params, const TimeSeriesDataset& data,
                              const LatentTrajectories& latents);

// Ancestral sampling in the order s_t, then every z_t^j, then every x_t^j.
// The system and each entity draw from independent streams derived from one
// value taken from rng, so entity j of an L = 1 model matches
// sample_entity_trajectory with stream mix_seed(base, j + 1).
std::pair<TimeSeriesDataset, LatentTrajectories> sample_model(
    const ModelParams& params, int T, std::vector<int> example_end_times, Rng& rng,
    const Eigen::MatrixXd& system_covariates = {},
    const std::vector<Eigen::MatrixXd>& entity_covariates = {});

// Samples one entity's (states, observations) given a fixed system path.
std::pair<std::vector<int>, Eigen::MatrixXd> sample_entity_trajectory(
    const ModelParams& params, int j, const std::vector<int>& system_states,
    const std::vector<int>& example_end_times, Rng& rng);

}  // namespace hsrdm
