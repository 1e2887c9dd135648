// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <optional>
#include <random>

#include "hsrdm/diagnostics.hpp"
#include "hsrdm/inference.hpp"
#include "inference_internal.hpp"
#include "parallel.hpp"

namespace hsrdm {
namespace {

constexpr double kEntityStickiness = 0.9;
constexpr double kSystemStickiness = 0.95;

LogTPM sticky_log_tpm(int n, double stay) {
  if (n == 1) return LogTPM::Zero(1, 1);
  LogTPM m = LogTPM::Constant(n, n, std::log((1.0 - stay) / (n - 1)));
  m.diagonal().setConstant(std::log(stay));
  return m;
}

TimeSeriesDataset entity_slice(const TimeSeriesDataset& data, int j) {
  TimeSeriesDataset d;
  d.observations = {data.observations[j]};
  d.example_end_times = data.example_end_times;
  if (!data.entity_covariates.empty()) d.entity_covariates = {data.entity_covariates[j]};
  if (data.has_mask()) d.observed = data.observed.col(j);
  return d;
}

// Pre-fit of emission parameters from hard k-means clusters.
void kmeans_preinit(ModelParams& params, const TimeSeriesDataset& data, const CaviConfig& config,
                    std::uint64_t seed) {
  const int T = data.num_timesteps();
  const int K = params.K;
  const int D = params.D;
  const auto starts = data.example_starts();
  const Eigen::MatrixXd& x = data.observations[0];
  const bool circular = params.family == EmissionFamily::von_mises_ar;

  // Transition rows usable by an autoregression.
  std::vector<int> rows;
  for (int t = 1; t < T; ++t)
    if (!starts[t] && entity_term_active(data, t, 0, false)) rows.push_back(t);
  const int n = static_cast<int>(rows.size());
  if (n < K || n < 2) return;

  const int dim = circular ? 2 : D;
  Eigen::MatrixXd points(n, dim);
  for (int i = 0; i < n; ++i) {
    const int t = rows[i];
    if (circular) {
      const double a = config.init_on_velocities ? wrap_angle(x(t, 0) - x(t - 1, 0)) : x(t, 0);
      points.row(i) << std::cos(a), std::sin(a);
    } else {
      points.row(i) = config.init_on_velocities ? Eigen::RowVectorXd(x.row(t) - x.row(t - 1))
                                                : Eigen::RowVectorXd(x.row(t));
    }
  }
  const KMeansResult km = kmeans(points, K, seed);

  Eigen::MatrixXd xp(n, D), xc(n, D);
  for (int i = 0; i < n; ++i) {
    xp.row(i) = x.row(rows[i] - 1);
    xc.row(i) = x.row(rows[i]);
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  auto fit = [&](const Eigen::VectorXd& w) -> EmissionParams {
    if (circular) return fit_von_mises_ar_weighted(xp.col(0), xc.col(0), w);
    return fit_gaussian_var_weighted(xp, xc, w);
  };
  std::optional<EmissionParams> global;
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = km.labels[i] == k ? 1.0 : 0.0;
    try {
      params.emissions[0][k] = fit(w);
      continue;
    } catch (const Error&) {
      diagnostics().singular_regressions++;
    }
    try {
      if (!global) global = fit(ones);
      params.emissions[0][k] = *global;
    } catch (const Error&) {
      // keep the identity default
    }
  }
}

}  // namespace

std::uint64_t entity_init_seed(std::uint64_t seed, int j) {
  return mix_seed(seed, 1000 + static_cast<std::uint64_t>(j));
}

RarhmmFit fit_rarhmm(const TimeSeriesDataset& data, int K, EmissionFamily family,
                     const RecurrenceSpec& entity_recurrence, const PriorConfig& prior,
                     const CaviConfig& config, std::uint64_t seed, int n_iterations) {
  if (data.num_entities() != 1) throw Error("InvalidModel", "fit_rarhmm takes a single entity");
  config.validate();
  ModelParams params =
      make_default_params(1, K, 1, data.obs_dim(), family, RecurrenceSpec{}, entity_recurrence);
  params.prior = prior;
  kmeans_preinit(params, data, config, seed);

  auto& block = params.entity.at(0, 0);
  block.log_tpm = sticky_log_tpm(K, kEntityStickiness);
  Rng rng(mix_seed(seed, 7));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < block.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < block.weights.cols(); ++c) block.weights(r, c) = normal(rng);

  const detail::Workspace ws(params, data);
  const ChainPosterior q_s =
      detail::independent_posterior(Eigen::MatrixXd::Ones(data.num_timesteps(), 1));
  std::vector<ChainPosterior> q_z(1);
  RarhmmFit out;
  const int rounds = std::max(1, n_iterations);
  for (int it = 0; it < rounds; ++it) {
    detail::entity_pass(params, ws, q_s, q_z, true, 1);
    if (it >= n_iterations) break;
    params = detail::m_step(params, ws, q_s, q_z, config, {});
    const auto parts = detail::entity_pass(params, ws, q_s, q_z, false, 1);
    out.trace.push_back(
        detail::assemble_elbo(params, ws, q_s, detail::system_log_matrices(params, ws), parts) +
        log_prior(params));
  }
  out.params = std::move(params);
  out.q_z = std::move(q_z[0]);
  return out;
}

SmartInitResult smart_initialize(const TimeSeriesDataset& data, const ModelSpec& spec,
                                 const CaviConfig& config) {
  config.validate();
  data.validate();
  const int J = data.num_entities();
  const int T = data.num_timesteps();
  const int L = spec.L;
  const int K = spec.K;

  std::vector<RarhmmFit> fits(J);
  detail::parallel_for(J, config.threads, [&](int j) {
    fits[j] = fit_rarhmm(entity_slice(data, j), K, spec.family, spec.entity_recurrence, spec.prior,
                         config, entity_init_seed(config.seed, j), config.bottom_iters);
  });

  SmartInitResult out;
  ModelParams& params = out.params;
  params = make_default_params(L, K, J, data.obs_dim(), spec.family, spec.system_recurrence,
                               spec.entity_recurrence);
  params.prior = spec.prior;
  params.validate();
  out.posterior.q_z.resize(J);
  for (int j = 0; j < J; ++j) {
    const ModelParams& f = fits[j].params;
    for (int l = 0; l < L; ++l) params.entity.at(j, l) = f.entity.at(0, 0);
    params.emissions[j] = f.emissions[0];
    params.init.pi_z[j] = f.init.pi_z[0];
    params.init.emissions[j] = f.init.emissions[0];
    out.posterior.q_z[j] = std::move(fits[j].q_z);
  }

  if (L == 1) {
    out.posterior.q_s = detail::independent_posterior(Eigen::MatrixXd::Ones(T, 1));
    return out;
  }

  params.system.log_tpm = sticky_log_tpm(L, kSystemStickiness);
  params.system.weights.setZero();
  params.init.pi_s = ProbVector::Constant(L, 1.0 / L);

  Eigen::MatrixXd summary(T, J * K);
  for (int j = 0; j < J; ++j) summary.middleCols(j * K, K) = out.posterior.q_z[j].unary;
  Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(T, L);
  if (T >= L) {
    const KMeansResult km = kmeans(summary, L, mix_seed(config.seed, 11));
    for (int t = 0; t < T; ++t) one_hot(t, km.labels[t]) = 1.0;
  } else {
    one_hot.setConstant(1.0 / L);
  }
  out.posterior.q_s = detail::independent_posterior(one_hot);

  const detail::Workspace ws(params, data);
  detail::MStepScope scope;
  scope.emissions = false;
  scope.initial_emissions = false;
  for (int it = 0; it < config.top_iters; ++it) {
    params = detail::m_step(params, ws, out.posterior.q_s, out.posterior.q_z, config, scope);
    auto qz = out.posterior.q_z;
    const auto parts = detail::entity_pass(params, ws, out.posterior.q_s, qz, false, config.threads);
    out.posterior.q_s =
        smooth(detail::make_ves_spec(params, ws, detail::system_log_matrices(params, ws),
                                     parts.evidence));
  }
  return out;
}

}  // namespace hsrdm
