// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/model.hpp"

#include <cmath>

#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

int draw(const Eigen::VectorXd& logp, Rng& rng) { return sample_log_categorical(logp, rng); }

Eigen::VectorXd log_of(const ProbVector& p) { return p.array().log(); }

// One entity step: draws z_t then x_t into `working` (rows < t filled).
int step_entity(const ModelParams& params, int j, int l, int t, bool boundary, int z_prev,
                TimeSeriesDataset& working, Rng& rng) {
  int z;
  if (boundary) {
    z = draw(log_of(params.init.pi_z[j]), rng);
    working.observations[j].row(t) = initial_sample(params.init.emissions[j][z], rng).transpose();
  } else {
    Eigen::VectorXd f = evaluate_recurrence(params.entity_recurrence, working, t, j);
    z = draw(entity_transition_log_probs(params.entity, j, l, z_prev, f), rng);
    const Eigen::VectorXd prev = working.observations[j].row(t - 1).transpose();
    working.observations[j].row(t) = emission_sample(params.emissions[j][z], prev, rng).transpose();
  }
  return z;
}

TimeSeriesDataset blank_dataset(const ModelParams& params, int T, std::vector<int> ends) {
  TimeSeriesDataset d;
  d.observations.assign(params.J, Eigen::MatrixXd::Zero(T, params.D));
  if (ends.empty()) ends.push_back(T);
  d.example_end_times = std::move(ends);
  return d;
}

}  // namespace

void ModelParams::validate() const {
  if (L < 1 || K < 1 || J < 1 || D < 1) throw Error("InvalidModel", "L, K, J, D must be >= 1");
  if (family == EmissionFamily::von_mises_ar && D != 1)
    throw Error("InvalidModel", "von Mises emissions are scalar (D = 1)");
  const int dg = system_feature_dim();
  const int df = entity_feature_dim();
  if (system.log_tpm.rows() != L || system.log_tpm.cols() != L || system.weights.rows() != L ||
      system.weights.cols() != dg)
    throw Error("FeatureDimMismatch", "system transition block");
  if (static_cast<int>(entity.blocks.size()) != J) throw Error("FeatureDimMismatch", "entity blocks");
  for (const auto& per_l : entity.blocks) {
    if (static_cast<int>(per_l.size()) != L) throw Error("FeatureDimMismatch", "entity blocks per l");
    for (const auto& b : per_l)
      if (b.log_tpm.rows() != K || b.log_tpm.cols() != K || b.weights.rows() != K ||
          b.weights.cols() != df)
        throw Error("FeatureDimMismatch", "entity transition block");
  }
  if (static_cast<int>(emissions.size()) != J) throw Error("FeatureDimMismatch", "emissions");
  for (const auto& per_k : emissions) {
    if (static_cast<int>(per_k.size()) != K) throw Error("FeatureDimMismatch", "emissions per k");
    for (const auto& e : per_k) {
      if (family_of(e) != family || obs_dim_of(e) != D)
        throw Error("FeatureDimMismatch", "emission family or dimension");
      hsrdm::validate(e);
    }
  }
  if (init.pi_s.size() != L || !is_prob_vector(init.pi_s)) throw Error("NotNormalized", "pi_s");
  if (static_cast<int>(init.pi_z.size()) != J || static_cast<int>(init.emissions.size()) != J)
    throw Error("FeatureDimMismatch", "init blocks");
  for (int j = 0; j < J; ++j) {
    if (init.pi_z[j].size() != K || !is_prob_vector(init.pi_z[j]))
      throw Error("NotNormalized", "pi_z");
    if (static_cast<int>(init.emissions[j].size()) != K)
      throw Error("FeatureDimMismatch", "initial emissions");
    for (const auto& e : init.emissions[j]) hsrdm::validate(e);
  }
}

ModelParams make_default_params(int L, int K, int J, int D, EmissionFamily family,
                                RecurrenceSpec system_recurrence,
                                RecurrenceSpec entity_recurrence) {
  ModelParams p;
  p.L = L;
  p.K = K;
  p.J = J;
  p.D = D;
  p.family = family;
  p.system_recurrence = std::move(system_recurrence);
  p.entity_recurrence = std::move(entity_recurrence);
  const int dg = p.system_feature_dim();
  const int df = p.entity_feature_dim();
  p.system.log_tpm = LogTPM::Constant(L, L, -std::log(static_cast<double>(L)));
  p.system.weights = Eigen::MatrixXd::Zero(L, dg);
  p.entity.blocks.assign(
      J, std::vector<EntityTransitionBlock>(
             L, EntityTransitionBlock{LogTPM::Constant(K, K, -std::log(static_cast<double>(K))),
                                      Eigen::MatrixXd::Zero(K, df)}));
  p.emissions.resize(J);
  p.init.pi_s = ProbVector::Constant(L, 1.0 / L);
  p.init.pi_z.assign(J, ProbVector::Constant(K, 1.0 / K));
  p.init.emissions.resize(J);
  for (int j = 0; j < J; ++j)
    for (int k = 0; k < K; ++k) {
      if (family == EmissionFamily::gaussian_var) {
        p.emissions[j].push_back(GaussianVarParams{Eigen::MatrixXd::Identity(D, D),
                                                   Eigen::VectorXd::Zero(D),
                                                   Eigen::MatrixXd::Identity(D, D)});
        p.init.emissions[j].push_back(
            GaussianInitParams{Eigen::VectorXd::Zero(D), Eigen::MatrixXd::Identity(D, D)});
      } else {
        p.emissions[j].push_back(VonMisesArParams{1.0, 0.0, 1.0});
        p.init.emissions[j].push_back(VonMisesInitParams{0.0, 1.0});
      }
    }
  return p;
}

double complete_data_log_prob(const ModelParams& params, const TimeSeriesDataset& data,
                              const LatentTrajectories& latents) {
  const int T = data.num_timesteps();
  const auto starts = data.example_starts();
  const Eigen::MatrixXd g = compute_system_features(params.system_recurrence, data);
  double lp = 0.0;
  for (int t = 0; t < T; ++t) {
    const int s = latents.system_states[t];
    lp += starts[t] ? std::log(params.init.pi_s(s))
                    : system_transition_log_probs(params.system, latents.system_states[t - 1],
                                                  g.row(t).transpose())(s);
  }
  for (int j = 0; j < params.J; ++j) {
    const Eigen::MatrixXd f = compute_entity_features(params.entity_recurrence, data, j);
    const auto& x = data.observations[j];
    for (int t = 0; t < T; ++t) {
      const int z = latents.entity_states(t, j);
      if (starts[t]) {
        lp += std::log(params.init.pi_z[j](z));
        if (entity_term_active(data, t, j, true))
          lp += initial_log_density(params.init.emissions[j][z], x.row(t).transpose());
        continue;
      }
      if (!entity_term_active(data, t, j, false)) continue;
      lp += entity_transition_log_probs(params.entity, j, latents.system_states[t],
                                          latents.entity_states(t - 1, j), f.row(t).transpose())(z);
      lp += emission_log_density(params.emissions[j][z], x.row(t - 1).transpose(),
                                   x.row(t).transpose());
    }
  }
  return lp;
}

std::pair<TimeSeriesDataset, LatentTrajectories> sample_model(
    const ModelParams& params, int T, std::vector<int> example_end_times, Rng& rng,
    const Eigen::MatrixXd& system_covariates,
    const std::vector<Eigen::MatrixXd>& entity_covariates) {
  params.validate();
  TimeSeriesDataset data = blank_dataset(params, T, std::move(example_end_times));
  data.system_covariates = system_covariates;
  data.entity_covariates = entity_covariates;
  const auto starts = data.example_starts();

  const std::uint64_t base = rng();
  Rng system_rng(mix_seed(base, 0));
  std::vector<Rng> entity_rng;
  for (int j = 0; j < params.J; ++j) entity_rng.emplace_back(mix_seed(base, j + 1));

  LatentTrajectories lat;
  lat.system_states.assign(T, 0);
  lat.entity_states = Eigen::MatrixXi::Zero(T, params.J);
  for (int t = 0; t < T; ++t) {
    if (starts[t]) {
      lat.system_states[t] = draw(log_of(params.init.pi_s), system_rng);
    } else {
      const Eigen::VectorXd g = evaluate_recurrence(params.system_recurrence, data, t);
      lat.system_states[t] = draw(
          system_transition_log_probs(params.system, lat.system_states[t - 1], g), system_rng);
    }
    const int l = lat.system_states[t];
    for (int j = 0; j < params.J; ++j) {
      const int z_prev = starts[t] ? 0 : lat.entity_states(t - 1, j);
      lat.entity_states(t, j) = step_entity(params, j, l, t, starts[t], z_prev, data, entity_rng[j]);
    }
  }
  return {std::move(data), std::move(lat)};
}

std::pair<std::vector<int>, Eigen::MatrixXd> sample_entity_trajectory(
    const ModelParams& params, int j, const std::vector<int>& system_states,
    const std::vector<int>& example_end_times, Rng& rng) {
  const int T = static_cast<int>(system_states.size());
  TimeSeriesDataset data = blank_dataset(params, T, example_end_times);
  const auto starts = data.example_starts();
  std::vector<int> z(T, 0);
  for (int t = 0; t < T; ++t)
    z[t] = step_entity(params, j, system_states[t], t, starts[t], starts[t] ? 0 : z[t - 1], data, rng);
  return {std::move(z), data.observations[j]};
}

}  // namespace hsrdm
