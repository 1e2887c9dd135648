// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/transitions.hpp"

#include <algorithm>
#include <cmath>

#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

double bound_at(const Eigen::VectorXd& v, Eigen::Index d) {
  return v.size() == 1 ? v(0) : v(d);
}

bool out_of_bounds(const RecurrenceSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  for (Eigen::Index d = 0; d < x.size(); ++d)
    if (!(x(d) > bound_at(spec.lower, d) && x(d) < bound_at(spec.upper, d))) return true;
  return false;
}

int base_dim(const RecurrenceSpec& spec, bool system_level, int J, int D) {
  switch (spec.kind) {
    case RecurrenceKind::zero:
      return 0;
    case RecurrenceKind::identity:
      return system_level ? J * D : D;
    case RecurrenceKind::rbf:
      return system_level ? J : 1;
    case RecurrenceKind::out_of_bounds_indicators:
      return 2 * D + (spec.include_position ? D : 0);
    case RecurrenceKind::oob_count:
    case RecurrenceKind::elapsed_since_predicate:
      return 1;
    case RecurrenceKind::custom:
      return spec.custom_dim;
  }
  return 0;
}

Eigen::VectorXd entity_point_features(const RecurrenceSpec& spec,
                                      const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index D = x.size();
  switch (spec.kind) {
    case RecurrenceKind::identity:
      return x;
    case RecurrenceKind::rbf: {
      Eigen::VectorXd out(1);
      const double d2 = spec.center.size() == 0 ? x.squaredNorm() : (x - spec.center).squaredNorm();
      out(0) = spec.scale * std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
      return out;
    }
    case RecurrenceKind::out_of_bounds_indicators: {
      Eigen::VectorXd out(2 * D + (spec.include_position ? D : 0));
      for (Eigen::Index d = 0; d < D; ++d) {
        out(2 * d) = x(d) <= bound_at(spec.lower, d) ? 1.0 : 0.0;
        out(2 * d + 1) = x(d) >= bound_at(spec.upper, d) ? 1.0 : 0.0;
      }
      if (spec.include_position) out.tail(D) = x;
      return out;
    }
    default:
      return Eigen::VectorXd(0);
  }
}

bool any_entity_satisfies(const RecurrenceSpec& spec, const TimeSeriesDataset& data, int t) {
  for (const auto& x : data.observations)
    if (spec.predicate.holds(x.row(t).transpose())) return true;
  return false;
}

bool entity_level_only(RecurrenceKind k) {
  return k == RecurrenceKind::rbf || k == RecurrenceKind::out_of_bounds_indicators;
}

void append_covariates(const RecurrenceSpec& spec, const TimeSeriesDataset& data, int t,
                       std::optional<int> entity, Eigen::VectorXd& out) {
  if (spec.covariate_dim == 0) return;
  const Eigen::Index base = out.size();
  out.conservativeResize(base + spec.covariate_dim);
  if (entity) {
    if (data.entity_covariate_dim() != spec.covariate_dim)
      throw Error("FeatureDimMismatch", "entity covariate dimension");
    out.tail(spec.covariate_dim) = data.entity_covariates[*entity].row(t).transpose();
  } else {
    if (data.system_covariate_dim() != spec.covariate_dim)
      throw Error("FeatureDimMismatch", "system covariate dimension");
    out.tail(spec.covariate_dim) = data.system_covariates.row(t).transpose();
  }
}

Eigen::VectorXd evaluate_raw(const RecurrenceSpec& spec, const TimeSeriesDataset& data, int t,
                             std::optional<int> entity) {
  const int J = data.num_entities();
  const int D = data.obs_dim();
  if (t < 1 || t >= data.num_timesteps())
    throw Error("OutOfRange", "recurrence needs 1 <= t < T");
  if (entity && (*entity < 0 || *entity >= J)) throw Error("OutOfRange", "entity index");
  if (entity_level_only(spec.kind) && !entity) throw Error("MissingEntityIndex");
  Eigen::VectorXd out;
  switch (spec.kind) {
    case RecurrenceKind::zero:
      out.resize(0);
      break;
    case RecurrenceKind::identity:
      if (entity) {
        out = data.observations[*entity].row(t - 1).transpose();
      } else {
        out.resize(J * D);
        for (int j = 0; j < J; ++j) out.segment(j * D, D) = data.observations[j].row(t - 1).transpose();
      }
      break;
    case RecurrenceKind::rbf:
    case RecurrenceKind::out_of_bounds_indicators:
      out = entity_point_features(spec, data.observations[*entity].row(t - 1).transpose());
      break;
    case RecurrenceKind::oob_count: {
      out.resize(1);
      int count = 0;
      for (const auto& x : data.observations)
        if (out_of_bounds(spec, x.row(t - 1).transpose())) ++count;
      out(0) = count;
      break;
    }
    case RecurrenceKind::elapsed_since_predicate: {
      const int start = data.example_start_of(t);
      int last = start - 1;  // treat the example start as a fresh event
      for (int s = t - 1; s >= start; --s)
        if (any_entity_satisfies(spec, data, s)) {
          last = s;
          break;
        }
      out.resize(1);
      out(0) = std::min(1.0, static_cast<double>(t - 1 - last) / spec.horizon);
      break;
    }
    case RecurrenceKind::custom:
      if (!spec.custom) throw Error("InvalidRecurrence", "custom kind without a function");
      out = spec.custom(data, t, entity);
      if (out.size() != spec.custom_dim)
        throw Error("FeatureDimMismatch", "custom recurrence returned wrong size");
      break;
  }
  append_covariates(spec, data, t, entity, out);
  return out;
}

}  // namespace

std::string to_string(RecurrenceKind kind) {
  switch (kind) {
    case RecurrenceKind::zero: return "zero";
    case RecurrenceKind::identity: return "identity";
    case RecurrenceKind::rbf: return "rbf";
    case RecurrenceKind::out_of_bounds_indicators: return "out_of_bounds_indicators";
    case RecurrenceKind::oob_count: return "oob_count";
    case RecurrenceKind::elapsed_since_predicate: return "elapsed_since_predicate";
    case RecurrenceKind::custom: return "custom";
  }
  return "zero";
}

RecurrenceKind recurrence_kind_from_string(const std::string& name) {
  for (auto k : {RecurrenceKind::zero, RecurrenceKind::identity, RecurrenceKind::rbf,
                 RecurrenceKind::out_of_bounds_indicators, RecurrenceKind::oob_count,
                 RecurrenceKind::elapsed_since_predicate, RecurrenceKind::custom})
    if (to_string(k) == name) return k;
  throw Error("InvalidRecurrence", "unknown recurrence kind '" + name + "'");
}

bool SectorPredicate::holds(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() < 2) return false;
  const double dx = x(0) - origin_x;
  const double dy = x(1) - origin_y;
  if (std::hypot(dx, dy) < min_radius) return false;
  const double angle = std::atan2(dy, dx);
  return angle >= angle_lo && angle <= angle_hi;
}

int recurrence_dim(const RecurrenceSpec& spec, bool system_level, int J, int D) {
  return base_dim(spec, system_level, J, D) + spec.covariate_dim;
}

Eigen::VectorXd evaluate_recurrence(const RecurrenceSpec& spec, const TimeSeriesDataset& data,
                                    int t, std::optional<int> entity) {
  if (spec.kind == RecurrenceKind::rbf && !entity) throw Error("MissingEntityIndex");
  return evaluate_raw(spec, data, t, entity);
}

Eigen::MatrixXd compute_system_features(const RecurrenceSpec& spec,
                                        const TimeSeriesDataset& data_in) {
  const TimeSeriesDataset data = impute_carry_forward(data_in);
  const int T = data.num_timesteps();
  const int J = data.num_entities();
  const int D = data.obs_dim();
  const int dim = recurrence_dim(spec, true, J, D);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(T, dim);
  if (dim == 0) return out;
  const auto starts = data.example_starts();

  if (spec.kind == RecurrenceKind::elapsed_since_predicate) {
    // single forward pass instead of a scan per timestep
    int last = -1;
    for (int t = 0; t < T; ++t) {
      if (starts[t]) {
        last = t - 1;
      } else {
        out(t, 0) = std::min(1.0, static_cast<double>(t - 1 - last) / spec.horizon);
        if (spec.covariate_dim > 0)
          out.row(t).tail(spec.covariate_dim) = data.system_covariates.row(t);
      }
      if (any_entity_satisfies(spec, data, t)) last = t;
    }
    return out;
  }
  for (int t = 0; t < T; ++t) {
    if (starts[t]) continue;
    if (spec.kind == RecurrenceKind::rbf) {
      for (int j = 0; j < J; ++j)
        out(t, j) = entity_point_features(spec, data.observations[j].row(t - 1).transpose())(0);
      if (spec.covariate_dim > 0)
        out.row(t).tail(spec.covariate_dim) = data.system_covariates.row(t);
    } else {
      out.row(t) = evaluate_raw(spec, data, t, std::nullopt).transpose();
    }
  }
  return out;
}

Eigen::MatrixXd compute_entity_features(const RecurrenceSpec& spec,
                                        const TimeSeriesDataset& data_in, int entity) {
  const TimeSeriesDataset& data = data_in;
  const int T = data.num_timesteps();
  const int dim = recurrence_dim(spec, false, data.num_entities(), data.obs_dim());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(T, dim);
  if (dim == 0) return out;
  const auto starts = data.example_starts();
  const bool needs_imputation = data.has_mask();
  const TimeSeriesDataset* src = &data;
  TimeSeriesDataset imputed;
  if (needs_imputation) {
    imputed = impute_carry_forward(data);
    src = &imputed;
  }
  for (int t = 1; t < T; ++t) {
    if (starts[t]) continue;
    out.row(t) = evaluate_raw(spec, *src, t, entity).transpose();
  }
  return out;
}

Eigen::MatrixXd cat_glm_log_matrix(const LogTPM& log_tpm, const Eigen::MatrixXd& weights,
                                   const Eigen::Ref<const Eigen::VectorXd>& features) {
  if (weights.cols() != features.size())
    throw Error("FeatureDimMismatch", "recurrence weights vs features");
  Eigen::MatrixXd u = log_tpm;
  if (features.size() > 0) u.rowwise() += (weights * features).transpose();
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    const Eigen::VectorXd row = u.row(r).transpose();
    u.row(r).array() -= logsumexp(row);
  }
  return u;
}

Eigen::VectorXd system_transition_log_probs(const SystemTransitionParams& params, int s_prev,
                                            const Eigen::Ref<const Eigen::VectorXd>& g_features) {
  if (params.weights.cols() != g_features.size())
    throw Error("FeatureDimMismatch", "system recurrence weights vs features");
  if (s_prev < 0 || s_prev >= params.log_tpm.rows()) throw Error("OutOfRange", "s_prev");
  Eigen::VectorXd u = params.log_tpm.row(s_prev).transpose();
  if (g_features.size() > 0) u += params.weights * g_features;
  return log_softmax(u);
}

Eigen::VectorXd entity_transition_log_probs(const EntityTransitionParams& params, int j, int l,
                                            int z_prev,
                                            const Eigen::Ref<const Eigen::VectorXd>& f_features) {
  const auto& block = params.at(j, l);
  if (block.weights.cols() != f_features.size())
    throw Error("FeatureDimMismatch", "entity recurrence weights vs features");
  if (z_prev < 0 || z_prev >= block.log_tpm.rows()) throw Error("OutOfRange", "z_prev");
  Eigen::VectorXd u = block.log_tpm.row(z_prev).transpose();
  if (f_features.size() > 0) u += block.weights * f_features;
  return log_softmax(u);
}

}  // namespace hsrdm
