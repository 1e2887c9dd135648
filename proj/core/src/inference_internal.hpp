// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "hsrdm/inference.hpp"

namespace hsrdm::detail {

// Observation-derived quantities that stay fixed during a fit.
struct Workspace {
  const TimeSeriesDataset* data = nullptr;
  std::vector<char> starts;
  Eigen::MatrixXd system_features;               // T x d_g
  std::vector<Eigen::MatrixXd> entity_features;  // J x (T x d_f)

  Workspace(const ModelParams& params, const TimeSeriesDataset& data);
  int T() const { return data->num_timesteps(); }
  bool active(int t, int j) const { return entity_term_active(*data, t, j, starts[t] != 0); }
};

// Row t: flattened L x L log transition matrix into timestep t.
RowMatrixXd system_log_matrices(const ModelParams& params, const Workspace& ws);
// Row t: L blocks of flattened K x K log transition matrices into t.
RowMatrixXd entity_log_matrices(const ModelParams& params, const Workspace& ws, int j);
// Row t: log emission (initial emission at example starts); 0 if inactive.
Eigen::MatrixXd entity_log_emissions(const ModelParams& params, const Workspace& ws, int j);

ChainSpec make_ves_spec(const ModelParams& params, const Workspace& ws, const RowMatrixXd& S,
                        const Eigen::MatrixXd& evidence);
ChainSpec make_vez_spec(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                        int j, const RowMatrixXd& P, const Eigen::MatrixXd& em);

// Entity-side ELBO pieces that VES needs as per-(t, l) evidence.
struct EntityParts {
  Eigen::MatrixXd evidence;      // T x L
  double emission_energy = 0.0;  // sum_j sum_t q_z . log emission
  double entropy = 0.0;          // sum_j H[q_z^j]
};

// Recomputes entity log matrices; with update_q_z each q_z^j is replaced by
// its VEZ optimum before its contribution is taken.
EntityParts entity_pass(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                        std::vector<ChainPosterior>& q_z, bool update_q_z, int threads);

double system_energy(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                     const RowMatrixXd& S);

double assemble_elbo(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                     const RowMatrixXd& S, const EntityParts& parts);

struct MStepScope {
  bool emissions = true;
  bool system_transitions = true;
  bool entity_transitions = true;
  bool initial_states = true;
  bool initial_emissions = true;
};

ModelParams m_step(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                   const std::vector<ChainPosterior>& q_z, const CaviConfig& config,
                   const MStepScope& scope);

// Product-form posterior from per-timestep marginals.
ChainPosterior independent_posterior(const Eigen::MatrixXd& unary);

}  // namespace hsrdm::detail
