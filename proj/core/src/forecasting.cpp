// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/forecasting.hpp"

#include <algorithm>

#include "inference_internal.hpp"

namespace hsrdm {
namespace {

void check_slice(const TimeSeriesDataset& data, int begin, int end) {
  if (begin < 0 || end < begin || end >= data.num_timesteps())
    throw Error("OutOfRange", "horizon outside the dataset");
  if (data.example_start_of(begin) != data.example_start_of(end))
    throw Error("CrossBoundarySlice", "horizon spans two examples");
}

}  // namespace

void ForecastRequest::validate(const TimeSeriesDataset& data) const {
  const int J = data.num_entities();
  if (target_entities.empty()) throw Error("InvalidConfig", "no target entities");
  std::vector<int> sorted = target_entities;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error("InvalidConfig", "duplicate target entity");
  if (sorted.front() < 0 || sorted.back() >= J)
    throw Error("OutOfRange", "target entity index out of range");
  if (n_samples < 1 || context_rounds < 1) throw Error("InvalidConfig", "n_samples, context_rounds >= 1");
  check_slice(data, begin, end);
  if (static_cast<int>(sorted.size()) == J && data.example_start_of(begin) == begin)
    throw Error("NoContextAvailable", "every entity is a target and the horizon starts an example");
}

Eigen::MatrixXd posterior_mean_fit(const ModelParams& params, const TimeSeriesDataset& data,
                                   const ChainPosterior& q_z, int entity, int begin, int end) {
  check_slice(data, begin, end);
  if (data.example_start_of(begin) == begin)
    throw Error("CrossBoundarySlice", "posterior mean needs the step before the slice");
  if (q_z.unary.rows() != data.num_timesteps() || q_z.unary.cols() != params.K)
    throw Error("FeatureDimMismatch", "posterior does not cover the dataset");
  const int n = end - begin + 1;
  Eigen::MatrixXd out(n, params.D);
  Eigen::VectorXd mu = data.observations[entity].row(begin - 1).transpose();
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(params.D);
    for (int k = 0; k < params.K; ++k) {
      const double w = q_z.unary(begin + i, k);
      if (w != 0.0) next += w * emission_conditional_mean(params.emissions[entity][k], mu);
    }
    mu = next;
    out.row(i) = mu.transpose();
  }
  return out;
}

ForecastResult partial_forecast(const ModelParams& params_in, const TimeSeriesDataset& data,
                                const ForecastRequest& request, const CaviConfig& fit_config) {
  request.validate(data);
  fit_config.validate();
  const int J = data.num_entities();

  // Hide the targets over the horizon; nothing downstream reads those values.
  TimeSeriesDataset masked = data;
  if (!masked.has_mask()) masked.observed = ObservedMask::Constant(data.num_timesteps(), J, true);
  for (int j : request.target_entities)
    for (int t = request.begin; t <= request.end; ++t) {
      masked.observed(t, j) = false;
      masked.observations[j].row(t).setZero();
    }
  masked = impute_carry_forward(masked);

  ModelParams params = params_in;
  if (request.refit)
    params = continue_cavi(params, masked, fit_config, fit_config.n_iterations).params;

  const int ex_begin = data.example_start_of(request.begin);
  const int ex_end = data.example_end_of(request.begin);
  const TimeSeriesDataset local = masked.slice(ex_begin, ex_end);
  const int h0 = request.begin - ex_begin;
  const int h1 = request.end - ex_begin;
  const int T = local.num_timesteps();

  const detail::Workspace ws(params, local);
  const RowMatrixXd S = detail::system_log_matrices(params, ws);
  ChainPosterior q_s =
      detail::independent_posterior(Eigen::MatrixXd::Constant(T, params.L, 1.0 / params.L));
  std::vector<ChainPosterior> q_z(J);
  ChainSpec ves;
  for (int r = 0; r < request.context_rounds; ++r) {
    const auto parts = detail::entity_pass(params, ws, q_s, q_z, true, fit_config.threads);
    ves = detail::make_ves_spec(params, ws, S, parts.evidence);
    q_s = smooth(ves);
  }

  ForecastResult out;
  out.target_entities = request.target_entities;
  out.begin = request.begin;
  out.end = request.end;
  const std::vector<int> s_hat = viterbi(ves);
  out.system_path.assign(s_hat.begin() + h0, s_hat.begin() + h1 + 1);

  const int n_targets = static_cast<int>(request.target_entities.size());
  std::vector<int> z_start(n_targets, -1);
  if (h0 > 0) {
    for (int i = 0; i < n_targets; ++i) {
      const int j = request.target_entities[i];
      const ChainSpec vez =
          detail::make_vez_spec(params, ws, q_s, j, detail::entity_log_matrices(params, ws, j),
                                detail::entity_log_emissions(params, ws, j));
      z_start[i] = viterbi(vez)[h0 - 1];
    }
  }

  out.samples.resize(request.n_samples);
  for (int n = 0; n < request.n_samples; ++n) {
    Rng rng(mix_seed(request.seed, static_cast<std::uint64_t>(n)));
    const std::vector<int> path = request.sample_system_path ? sample_posterior_path(ves, rng) : s_hat;
    TimeSeriesDataset work = local;
    std::vector<int> z = z_start;
    for (int t = h0; t <= h1; ++t) {
      for (int i = 0; i < n_targets; ++i) {
        const int j = request.target_entities[i];
        auto& x = work.observations[j];
        if (t == 0) {
          z[i] = sample_log_categorical(params.init.pi_z[j].array().log().matrix(), rng);
          x.row(t) = initial_sample(params.init.emissions[j][z[i]], rng).transpose();
          continue;
        }
        const Eigen::VectorXd f = evaluate_recurrence(params.entity_recurrence, work, t, j);
        z[i] = sample_log_categorical(
            entity_transition_log_probs(params.entity, j, path[t], z[i], f), rng);
        const Eigen::VectorXd prev = x.row(t - 1).transpose();
        x.row(t) = emission_sample(params.emissions[j][z[i]], prev, rng).transpose();
      }
    }
    out.samples[n].reserve(n_targets);
    for (int j : request.target_entities)
      out.samples[n].push_back(work.observations[j].middleRows(h0, h1 - h0 + 1));
  }
  return out;
}

}  // namespace hsrdm
