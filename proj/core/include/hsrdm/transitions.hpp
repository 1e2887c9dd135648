// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hsrdm/core_math.hpp"
#include "hsrdm/dataset.hpp"

namespace hsrdm {

// Cat-GLM over L system states: row s_prev of log_tpm plus weights * g.
struct SystemTransitionParams {
  LogTPM log_tpm;           // L x L
  Eigen::MatrixXd weights;  // L x d_g
};

struct EntityTransitionBlock {
  LogTPM log_tpm;           // K x K
  Eigen::MatrixXd weights;  // K x d_f
};

// One block per (entity j, system state l), indexed blocks[j][l].
struct EntityTransitionParams {
  std::vector<std::vector<EntityTransitionBlock>> blocks;

  const EntityTransitionBlock& at(int j, int l) const { return blocks.at(j).at(l); }
  EntityTransitionBlock& at(int j, int l) { return blocks.at(j).at(l); }
};

enum class RecurrenceKind {
  zero,
  identity,
  rbf,
  out_of_bounds_indicators,
  oob_count,
  elapsed_since_predicate,
  custom,
};

std::string to_string(RecurrenceKind kind);
RecurrenceKind recurrence_kind_from_string(const std::string& name);

// Holds for an entity when the angle of its first two coordinates about
// `origin` lies in [angle_lo, angle_hi] and its radius is at least
// min_radius.
struct SectorPredicate {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double angle_lo = -3.141592653589793;
  double angle_hi = 3.141592653589793;
  double min_radius = 0.0;

  bool holds(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

using CustomRecurrence =
    std::function<Eigen::VectorXd(const TimeSeriesDataset& data, int t, std::optional<int> entity)>;

// Featurization of x_{t-1} feeding a transition. Entity-level kinds
// (rbf, out_of_bounds_indicators) need an entity index; system-level kinds
// (oob_count, elapsed_since_predicate) look at all entities. identity works
// at both levels (the system version concatenates every entity).
struct RecurrenceSpec {
  RecurrenceKind kind = RecurrenceKind::zero;

  // rbf: scale * exp(-|x - center|^2 / (2 bandwidth^2)); empty center = origin
  Eigen::VectorXd center;
  double bandwidth = 1.0;
  double scale = 1.0;

  // out-of-bounds box, one entry per dimension or a single broadcast entry
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd upper = Eigen::VectorXd::Ones(1);
  bool include_position = false;  // indicators: append x_{t-1} itself

  SectorPredicate predicate;
  double horizon = 100.0;  // elapsed-time normalizer (clamped at 1)

  CustomRecurrence custom;
  int custom_dim = 0;

  int covariate_dim = 0;  // appended after the features

  bool is_zero() const { return kind == RecurrenceKind::zero && covariate_dim == 0; }
};

// Output dimension (features plus covariates). `system_level` selects the
// system interpretation of identity.
int recurrence_dim(const RecurrenceSpec& spec, bool system_level, int J, int D);

// Features for the transition into timestep t (consumes x_{t-1}). Throws
// "MissingEntityIndex" for entity-level kinds called without an entity.
Eigen::VectorXd evaluate_recurrence(const RecurrenceSpec& spec, const TimeSeriesDataset& data,
                                    int t, std::optional<int> entity = std::nullopt);

// T x d matrices; row t holds the features for the transition into t, rows at
// example starts are zero. Masked inputs are carry-forward imputed first.
Eigen::MatrixXd compute_system_features(const RecurrenceSpec& spec, const TimeSeriesDataset& data);
Eigen::MatrixXd compute_entity_features(const RecurrenceSpec& spec, const TimeSeriesDataset& data,
                                        int entity);

// log_softmax(log_tpm[s_prev] + weights * g). Throws "FeatureDimMismatch".
Eigen::VectorXd system_transition_log_probs(const SystemTransitionParams& params, int s_prev,
                                            const Eigen::Ref<const Eigen::VectorXd>& g_features);
Eigen::VectorXd entity_transition_log_probs(const EntityTransitionParams& params, int j, int l,
                                            int z_prev,
                                            const Eigen::Ref<const Eigen::VectorXd>& f_features);

// Full n x n log transition matrix for one timestep.
Eigen::MatrixXd cat_glm_log_matrix(const LogTPM& log_tpm, const Eigen::MatrixXd& weights,
                                   const Eigen::Ref<const Eigen::VectorXd>& features);

}  // namespace hsrdm
