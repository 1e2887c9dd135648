// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/inference.hpp"

#include <cmath>
#include <limits>

#include "hsrdm/catglm.hpp"
#include "hsrdm/diagnostics.hpp"
#include "inference_internal.hpp"
#include "parallel.hpp"

namespace hsrdm {
namespace detail {
namespace {

constexpr double kMinBlockWeight = 1e-12;
// Cat-GLM points whose expected count is below this are left out of the fit.
constexpr double kMinPointMass = 1e-6;
constexpr double kEmptyState = 1e-6;

Eigen::VectorXd log_of(const ProbVector& p) { return p.array().log(); }

void add_tiled(RowMatrixXd& m, int row, const Eigen::VectorXd& log_init) {
  const int n = static_cast<int>(log_init.size());
  for (int i = 0; i < n; ++i) m.row(row).segment(i * n, n) = log_init.transpose();
}

}  // namespace

Workspace::Workspace(const ModelParams& params, const TimeSeriesDataset& d)
    : data(&d), starts(d.example_starts()) {
  d.validate();
  if (d.num_entities() != params.J || d.obs_dim() != params.D)
    throw Error("FeatureDimMismatch", "dataset shape does not match the model");
  system_features = compute_system_features(params.system_recurrence, d);
  entity_features.reserve(params.J);
  for (int j = 0; j < params.J; ++j)
    entity_features.push_back(compute_entity_features(params.entity_recurrence, d, j));
}

RowMatrixXd system_log_matrices(const ModelParams& params, const Workspace& ws) {
  const int T = ws.T();
  const int L = params.L;
  RowMatrixXd S = RowMatrixXd::Zero(T, L * L);
  const bool has_features = ws.system_features.cols() > 0;
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(L);
  for (int t = 1; t < T; ++t) {
    if (ws.starts[t]) continue;
    if (has_features) bias.noalias() = params.system.weights * ws.system_features.row(t).transpose();
    for (int i = 0; i < L; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < L; ++k) m = std::max(m, params.system.log_tpm(i, k) + bias(k));
      double s = 0.0;
      for (int k = 0; k < L; ++k) s += std::exp(params.system.log_tpm(i, k) + bias(k) - m);
      const double lse = m + std::log(s);
      for (int k = 0; k < L; ++k) S(t, i * L + k) = params.system.log_tpm(i, k) + bias(k) - lse;
    }
  }
  return S;
}

RowMatrixXd entity_log_matrices(const ModelParams& params, const Workspace& ws, int j) {
  const int T = ws.T();
  const int L = params.L;
  const int K = params.K;
  const int KK = K * K;
  RowMatrixXd P = RowMatrixXd::Zero(T, L * KK);
  const Eigen::MatrixXd& F = ws.entity_features[j];
  const bool has_features = F.cols() > 0;
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(K);
  for (int t = 1; t < T; ++t) {
    if (ws.starts[t] || !ws.active(t, j)) continue;
    for (int l = 0; l < L; ++l) {
      const auto& block = params.entity.at(j, l);
      if (has_features) bias.noalias() = block.weights * F.row(t).transpose();
      double* out = P.row(t).data() + l * KK;
      for (int i = 0; i < K; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) m = std::max(m, block.log_tpm(i, k) + bias(k));
        double s = 0.0;
        for (int k = 0; k < K; ++k) s += std::exp(block.log_tpm(i, k) + bias(k) - m);
        const double lse = m + std::log(s);
        for (int k = 0; k < K; ++k) out[i * K + k] = block.log_tpm(i, k) + bias(k) - lse;
      }
    }
  }
  return P;
}

Eigen::MatrixXd entity_log_emissions(const ModelParams& params, const Workspace& ws, int j) {
  const int T = ws.T();
  const int K = params.K;
  const Eigen::MatrixXd& x = ws.data->observations[j];
  Eigen::MatrixXd em(T, K);
  Eigen::VectorXd col(T);
  for (int k = 0; k < K; ++k) {
    emission_log_densities(params.emissions[j][k], x, col);
    em.col(k) = col;
  }
  for (int t = 0; t < T; ++t) {
    if (!ws.active(t, j)) {
      em.row(t).setZero();
    } else if (ws.starts[t]) {
      for (int k = 0; k < K; ++k)
        em(t, k) = initial_log_density(params.init.emissions[j][k], x.row(t).transpose());
    }
  }
  return em;
}

ChainSpec make_ves_spec(const ModelParams& params, const Workspace& ws, const RowMatrixXd& S,
                        const Eigen::MatrixXd& evidence) {
  const int T = ws.T();
  ChainSpec spec;
  spec.n_states = params.L;
  spec.log_init = log_of(params.init.pi_s);
  spec.log_transitions.resize(T - 1, params.L * params.L);
  for (int t = 1; t < T; ++t) {
    if (ws.starts[t])
      add_tiled(spec.log_transitions, t - 1, spec.log_init);
    else
      spec.log_transitions.row(t - 1) = S.row(t);
  }
  spec.log_emissions = evidence;
  return spec;
}

ChainSpec make_vez_spec(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                        int j, const RowMatrixXd& P, const Eigen::MatrixXd& em) {
  const int T = ws.T();
  const int K = params.K;
  const int KK = K * K;
  ChainSpec spec;
  spec.n_states = K;
  spec.log_init = log_of(params.init.pi_z[j]);
  spec.log_transitions = RowMatrixXd::Zero(T - 1, KK);
  for (int t = 1; t < T; ++t) {
    if (ws.starts[t]) {
      add_tiled(spec.log_transitions, t - 1, spec.log_init);
      continue;
    }
    if (!ws.active(t, j)) continue;  // zero potential: no information
    auto row = spec.log_transitions.row(t - 1);
    for (int l = 0; l < params.L; ++l) {
      const double w = q_s.unary(t, l);
      if (w == 0.0) continue;
      row += w * P.row(t).segment(l * KK, KK);
    }
  }
  spec.log_emissions = em;
  return spec;
}

EntityParts entity_pass(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                        std::vector<ChainPosterior>& q_z, bool update_q_z, int threads) {
  const int T = ws.T();
  const int L = params.L;
  const int K = params.K;
  const int KK = K * K;
  const int J = params.J;
  EntityParts parts;
  parts.evidence = Eigen::MatrixXd::Zero(T, L);

  struct Local {
    Eigen::MatrixXd evidence;
    double emission_energy = 0.0;
    double entropy = 0.0;
  };
  auto work = [&](int j, Local& out) {
    const RowMatrixXd P = entity_log_matrices(params, ws, j);
    const Eigen::MatrixXd em = entity_log_emissions(params, ws, j);
    if (update_q_z) q_z[j] = smooth(make_vez_spec(params, ws, q_s, j, P, em));
    const ChainPosterior& q = q_z[j];
    out.evidence = Eigen::MatrixXd::Zero(T, L);
    const Eigen::VectorXd log_pi = log_of(params.init.pi_z[j]);
    for (int t = 0; t < T; ++t) {
      if (ws.starts[t]) {
        out.evidence.row(t).setConstant(q.unary.row(t).dot(log_pi));
        continue;
      }
      if (!ws.active(t, j)) continue;
      const double* pair = q.pairwise.row(t - 1).data();
      for (int l = 0; l < L; ++l) {
        const double* lp = P.row(t).data() + l * KK;
        double acc = 0.0;
        for (int c = 0; c < KK; ++c)
          if (pair[c] != 0.0) acc += pair[c] * lp[c];
        out.evidence(t, l) = acc;
      }
    }
    out.emission_energy = q.unary.cwiseProduct(em).sum();
    out.entropy = chain_entropy(q);
  };

  const int batch = std::max(1, threads);
  std::vector<Local> locals(std::min(batch, J));
  for (int begin = 0; begin < J; begin += batch) {
    const int n = std::min(batch, J - begin);
    parallel_for(n, threads, [&](int i) { work(begin + i, locals[i]); });
    for (int i = 0; i < n; ++i) {
      parts.evidence += locals[i].evidence;
      parts.emission_energy += locals[i].emission_energy;
      parts.entropy += locals[i].entropy;
    }
  }
  return parts;
}

double system_energy(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                     const RowMatrixXd& S) {
  const int T = ws.T();
  const Eigen::VectorXd log_pi = log_of(params.init.pi_s);
  double e = 0.0;
  for (int t = 0; t < T; ++t) {
    if (ws.starts[t]) {
      e += q_s.unary.row(t).dot(log_pi);
      continue;
    }
    const double* pair = q_s.pairwise.row(t - 1).data();
    const double* ls = S.row(t).data();
    for (int c = 0; c < params.L * params.L; ++c)
      if (pair[c] != 0.0) e += pair[c] * ls[c];
  }
  return e;
}

double assemble_elbo(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                     const RowMatrixXd& S, const EntityParts& parts) {
  return system_energy(params, ws, q_s, S) + q_s.unary.cwiseProduct(parts.evidence).sum() +
         parts.emission_energy + chain_entropy(q_s) + parts.entropy;
}

ChainPosterior independent_posterior(const Eigen::MatrixXd& unary) {
  const int T = static_cast<int>(unary.rows());
  const int n = static_cast<int>(unary.cols());
  ChainPosterior p;
  p.unary = unary;
  p.pairwise.resize(std::max(0, T - 1), n * n);
  for (int t = 0; t + 1 < T; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p.pairwise(t, i * n + j) = unary(t, i) * unary(t + 1, j);
  p.log_normalizer = 0.0;
  return p;
}

namespace {

CatGlmOptions solver_options(const CaviConfig& config) {
  CatGlmOptions o;
  o.max_iterations = config.m_step_substeps;
  o.initial_step = config.initial_step;
  o.backtrack_factor = config.backtrack_factor;
  o.max_line_search = config.max_line_search;
  return o;
}

void update_emissions(const ModelParams& old, ModelParams& out, const Workspace& ws,
                      const ChainPosterior& q, int j) {
  const int T = ws.T();
  const int K = old.K;
  const Eigen::MatrixXd& x = ws.data->observations[j];
  std::vector<int> rows;
  for (int t = 1; t < T; ++t)
    if (!ws.starts[t] && ws.active(t, j)) rows.push_back(t);
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd xp(n, old.D), xc(n, old.D), w(n, K);
  for (int i = 0; i < n; ++i) {
    xp.row(i) = x.row(rows[i] - 1);
    xc.row(i) = x.row(rows[i]);
    w.row(i) = q.unary.row(rows[i]);
  }
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd wk = w.col(k);
    if (wk.sum() < kEmptyState) {
      diagnostics().empty_states++;
      continue;
    }
    const EmissionParams& prev = old.emissions[j][k];
    try {
      if (old.family == EmissionFamily::gaussian_var) {
        GaussianVarParams cand = fit_gaussian_var_weighted(xp, xc, wk);
        const auto& p = std::get<GaussianVarParams>(prev);
        if (gaussian_var_weighted_loglik(cand, xp, xc, wk) >= gaussian_var_weighted_loglik(p, xp, xc, wk))
          out.emissions[j][k] = std::move(cand);
      } else {
        VonMisesArParams cand = fit_von_mises_ar_weighted(xp.col(0), xc.col(0), wk);
        const auto& p = std::get<VonMisesArParams>(prev);
        if (von_mises_weighted_loglik(cand, xp.col(0), xc.col(0), wk) >=
            von_mises_weighted_loglik(p, xp.col(0), xc.col(0), wk))
          out.emissions[j][k] = cand;
      }
    } catch (const Error& e) {
      if (e.code() != "UnidentifiableRegression" && e.code() != "EmptyWeightSet" &&
          e.code() != "DegenerateCovariance")
        throw;
      diagnostics().singular_regressions++;
    }
  }
}

double init_objective(const InitialEmissionParams& p, const Eigen::MatrixXd& x,
                      const Eigen::VectorXd& w) {
  double v = initial_weighted_loglik(p, x, w);
  if (const auto* g = std::get_if<GaussianInitParams>(&p))
    v += InitCovariancePrior::log_density(g->covariance);
  return v;
}

void update_initial(const ModelParams& old, ModelParams& out, const Workspace& ws,
                    const ChainPosterior& q, int j, bool states, bool emissions) {
  const int T = ws.T();
  const int K = old.K;
  const double c = old.prior.init_concentration;
  if (states) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
    for (int t = 0; t < T; ++t)
      if (ws.starts[t]) counts += q.unary.row(t).transpose();
    counts.array() += c - 1.0;
    out.init.pi_z[j] = counts / counts.sum();
  }
  if (!emissions) return;
  std::vector<int> rows;
  for (int t = 0; t < T; ++t)
    if (ws.starts[t] && ws.active(t, j)) rows.push_back(t);
  if (rows.empty()) return;
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd x(n, old.D), w(n, K);
  for (int i = 0; i < n; ++i) {
    x.row(i) = ws.data->observations[j].row(rows[i]);
    w.row(i) = q.unary.row(rows[i]);
  }
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd wk = w.col(k);
    if (!(wk.sum() > kMinBlockWeight)) continue;
    InitialEmissionParams cand;
    if (old.family == EmissionFamily::gaussian_var)
      cand = fit_gaussian_init_map(x, wk);
    else
      cand = fit_von_mises_init(x.col(0), wk);
    if (init_objective(cand, x, wk) >= init_objective(old.init.emissions[j][k], x, wk))
      out.init.emissions[j][k] = cand;
  }
}

CatGlmData entity_glm_data(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                           const ChainPosterior& q, int j, int l) {
  const int T = ws.T();
  const int K = params.K;
  const Eigen::MatrixXd& F = ws.entity_features[j];
  CatGlmData d;
  d.n_states = K;
  d.feature_dim = static_cast<int>(F.cols());
  std::vector<int> ts;
  std::vector<double> scales;
  for (int t = 1; t < T; ++t) {
    if (ws.starts[t] || !ws.active(t, j)) continue;
    const double w = q_s.unary(t, l);
    if (w < kMinPointMass) continue;
    for (int k = 0; k < K; ++k) {
      double mass = 0.0;
      for (int k2 = 0; k2 < K; ++k2) mass += q.pairwise(t - 1, k * K + k2);
      if (w * mass < kMinPointMass) continue;
      ts.push_back(t);
      d.prev.push_back(k);
      scales.push_back(w);
    }
  }
  const int n = static_cast<int>(ts.size());
  d.features.resize(n, d.feature_dim);
  d.counts.resize(n, K);
  for (int i = 0; i < n; ++i) {
    if (d.feature_dim > 0) d.features.row(i) = F.row(ts[i]);
    const int k = d.prev[i];
    for (int k2 = 0; k2 < K; ++k2) d.counts(i, k2) = scales[i] * q.pairwise(ts[i] - 1, k * K + k2);
  }
  return d;
}

CatGlmData system_glm_data(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s) {
  const int T = ws.T();
  const int L = params.L;
  CatGlmData d;
  d.n_states = L;
  d.feature_dim = static_cast<int>(ws.system_features.cols());
  std::vector<int> ts;
  for (int t = 1; t < T; ++t) {
    if (ws.starts[t]) continue;
    for (int l = 0; l < L; ++l) {
      double mass = 0.0;
      for (int l2 = 0; l2 < L; ++l2) mass += q_s.pairwise(t - 1, l * L + l2);
      if (mass < kMinPointMass) continue;
      ts.push_back(t);
      d.prev.push_back(l);
    }
  }
  const int n = static_cast<int>(ts.size());
  d.features.resize(n, d.feature_dim);
  d.counts.resize(n, L);
  for (int i = 0; i < n; ++i) {
    if (d.feature_dim > 0) d.features.row(i) = ws.system_features.row(ts[i]);
    const int l = d.prev[i];
    for (int l2 = 0; l2 < L; ++l2) d.counts(i, l2) = q_s.pairwise(ts[i] - 1, l * L + l2);
  }
  d.prior_counts = Eigen::MatrixXd::Constant(L, L, params.prior.alpha - 1.0);
  d.prior_counts.diagonal().array() += params.prior.kappa;
  return d;
}

}  // namespace

ModelParams m_step(const ModelParams& params, const Workspace& ws, const ChainPosterior& q_s,
                   const std::vector<ChainPosterior>& q_z, const CaviConfig& config,
                   const MStepScope& scope) {
  ModelParams out = params;
  const int J = params.J;
  const int L = params.L;
  const int T = ws.T();
  const CatGlmOptions opts = solver_options(config);

  if (scope.initial_states) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(L);
    for (int t = 0; t < T; ++t)
      if (ws.starts[t]) counts += q_s.unary.row(t).transpose();
    counts.array() += params.prior.init_concentration - 1.0;
    out.init.pi_s = counts / counts.sum();
  }

  if (scope.system_transitions && L > 1) {
    const CatGlmData d = system_glm_data(params, ws, q_s);
    const CatGlmResult r = fit_catglm(d, params.system.log_tpm, params.system.weights, opts);
    if (r.line_search_failed) diagnostics().line_search_failures++;
    if (r.objective >= r.initial_objective) {
      out.system.log_tpm = r.log_tpm;
      out.system.weights = r.weights;
    }
  }

  parallel_for(J, config.threads, [&](int j) {
    if (scope.emissions) update_emissions(params, out, ws, q_z[j], j);
    if (scope.initial_states || scope.initial_emissions)
      update_initial(params, out, ws, q_z[j], j, scope.initial_states, scope.initial_emissions);
    if (!scope.entity_transitions) return;
    for (int l = 0; l < L; ++l) {
      const CatGlmData d = entity_glm_data(params, ws, q_s, q_z[j], j, l);
      if (d.size() == 0) continue;
      const auto& block = params.entity.at(j, l);
      const CatGlmResult r = fit_catglm(d, block.log_tpm, block.weights, opts);
      if (r.line_search_failed) diagnostics().line_search_failures++;
      if (r.objective >= r.initial_objective) {
        out.entity.at(j, l).log_tpm = r.log_tpm;
        out.entity.at(j, l).weights = r.weights;
      }
    }
  });
  return out;
}

}  // namespace detail

void CaviConfig::validate() const {
  if (n_iterations < 0 || m_step_substeps < 1 || !(initial_step > 0.0) ||
      !(backtrack_factor > 0.0 && backtrack_factor < 1.0) || max_line_search < 1 ||
      tolerance < 0.0 || bottom_iters < 0 || top_iters < 0 || threads < 1)
    throw Error("InvalidConfig", "inference settings out of range");
  if (learn_recurrence)
    throw Error("InvalidConfig", "no shipped recurrence kind has learnable parameters");
}

ChainSpec build_ves_spec(const ModelParams& params, const TimeSeriesDataset& data,
                         const std::vector<ChainPosterior>& q_z) {
  const detail::Workspace ws(params, data);
  std::vector<ChainPosterior> qz = q_z;
  ChainPosterior dummy = detail::independent_posterior(
      Eigen::MatrixXd::Constant(data.num_timesteps(), params.L, 1.0 / params.L));
  const auto parts = detail::entity_pass(params, ws, dummy, qz, false, 1);
  return detail::make_ves_spec(params, ws, detail::system_log_matrices(params, ws), parts.evidence);
}

ChainSpec build_vez_spec(const ModelParams& params, const TimeSeriesDataset& data,
                         const ChainPosterior& q_s, int entity) {
  const detail::Workspace ws(params, data);
  return detail::make_vez_spec(params, ws, q_s, entity,
                               detail::entity_log_matrices(params, ws, entity),
                               detail::entity_log_emissions(params, ws, entity));
}

ChainPosterior ves_step(const ModelParams& params, const TimeSeriesDataset& data,
                        const std::vector<ChainPosterior>& q_z) {
  return smooth(build_ves_spec(params, data, q_z));
}

ChainPosterior vez_step(const ModelParams& params, const TimeSeriesDataset& data,
                        const ChainPosterior& q_s, int entity) {
  return smooth(build_vez_spec(params, data, q_s, entity));
}

ModelParams m_step(const ModelParams& params, const TimeSeriesDataset& data,
                   const ChainPosterior& q_s, const std::vector<ChainPosterior>& q_z,
                   const CaviConfig& config) {
  config.validate();
  const detail::Workspace ws(params, data);
  return detail::m_step(params, ws, q_s, q_z, config, {});
}

double compute_elbo(const ModelParams& params, const TimeSeriesDataset& data,
                    const VariationalPosterior& q) {
  const detail::Workspace ws(params, data);
  std::vector<ChainPosterior> qz = q.q_z;
  const auto parts = detail::entity_pass(params, ws, q.q_s, qz, false, 1);
  return detail::assemble_elbo(params, ws, q.q_s, detail::system_log_matrices(params, ws), parts);
}

double log_prior(const ModelParams& params) {
  double lp = 0.0;
  const auto& pr = params.prior;
  const int L = params.L;
  for (int l = 0; l < L; ++l) {
    const Eigen::VectorXd logp = log_softmax(params.system.log_tpm.row(l).transpose());
    double conc_sum = 0.0;
    for (int k = 0; k < L; ++k) {
      const double a = pr.alpha + (k == l ? pr.kappa : 0.0);
      conc_sum += a;
      lp -= std::lgamma(a);
      if (a != 1.0) lp += (a - 1.0) * logp(k);
    }
    lp += std::lgamma(conc_sum);
  }
  auto sym_dirichlet = [&](const ProbVector& p) {
    const double c = pr.init_concentration;
    const auto n = static_cast<double>(p.size());
    double v = std::lgamma(n * c) - n * std::lgamma(c);
    if (c != 1.0) v += (c - 1.0) * p.array().log().sum();
    return v;
  };
  lp += sym_dirichlet(params.init.pi_s);
  for (const auto& pz : params.init.pi_z) lp += sym_dirichlet(pz);
  for (const auto& per_k : params.init.emissions)
    for (const auto& e : per_k)
      if (const auto* g = std::get_if<GaussianInitParams>(&e))
        lp += InitCovariancePrior::log_density(g->covariance);
  return lp;
}

CaviResult continue_cavi(const ModelParams& params_in, const TimeSeriesDataset& data,
                         const CaviConfig& config, int n_iterations,
                         const VariationalPosterior* start) {
  config.validate();
  params_in.validate();
  const detail::Workspace ws(params_in, data);
  const int T = data.num_timesteps();
  auto result = std::make_shared<CaviResult>();
  result->params = params_in;
  ModelParams& params = result->params;
  VariationalPosterior& q = result->posterior;

  if (start) {
    q = *start;
  } else {
    q.q_s = detail::independent_posterior(Eigen::MatrixXd::Constant(T, params.L, 1.0 / params.L));
    q.q_z.assign(params.J, ChainPosterior{});
  }
  RowMatrixXd S = detail::system_log_matrices(params, ws);
  detail::EntityParts parts = detail::entity_pass(params, ws, q.q_s, q.q_z, start == nullptr,
                                                  config.threads);
  auto record = [&](int it, const char* phase, const detail::EntityParts& p) {
    const double v = detail::assemble_elbo(params, ws, q.q_s, S, p) + log_prior(params);
    result->trace.push_back({it, phase, v});
    return v;
  };
  double last = record(0, "init", parts);

  try {
    for (int it = 1; it <= n_iterations; ++it) {
      auto next = std::make_shared<CaviResult>(*result);
      ModelParams& np = next->params;
      VariationalPosterior& nq = next->posterior;

      nq.q_s = smooth(detail::make_ves_spec(np, ws, S, parts.evidence));
      {
        const double v = detail::assemble_elbo(np, ws, nq.q_s, S, parts) + log_prior(np);
        next->trace.push_back({it, "ves", v});
      }
      parts = detail::entity_pass(np, ws, nq.q_s, nq.q_z, true, config.threads);
      next->trace.push_back(
          {it, "vez", detail::assemble_elbo(np, ws, nq.q_s, S, parts) + log_prior(np)});

      np = detail::m_step(np, ws, nq.q_s, nq.q_z, config, {});
      S = detail::system_log_matrices(np, ws);
      parts = detail::entity_pass(np, ws, nq.q_s, nq.q_z, false, config.threads);
      const double v = detail::assemble_elbo(np, ws, nq.q_s, S, parts) + log_prior(np);
      next->trace.push_back({it, "m", v});
      result = next;
      if (config.tolerance > 0.0 && std::abs(v - last) <= config.tolerance * std::abs(v)) break;
      last = v;
    }
  } catch (const Error& e) {
    throw CaviAborted(e, result);
  }
  return *result;
}

VariationalPosterior infer_posterior(const ModelParams& params, const TimeSeriesDataset& data,
                                     int rounds, int threads) {
  params.validate();
  if (rounds < 1) throw Error("OutOfRange", "rounds must be >= 1");
  const detail::Workspace ws(params, data);
  const RowMatrixXd S = detail::system_log_matrices(params, ws);
  VariationalPosterior q;
  q.q_s = detail::independent_posterior(
      Eigen::MatrixXd::Constant(data.num_timesteps(), params.L, 1.0 / params.L));
  q.q_z.assign(params.J, ChainPosterior{});
  detail::EntityParts parts = detail::entity_pass(params, ws, q.q_s, q.q_z, true, threads);
  for (int r = 0; r < rounds; ++r) {
    q.q_s = smooth(detail::make_ves_spec(params, ws, S, parts.evidence));
    parts = detail::entity_pass(params, ws, q.q_s, q.q_z, true, threads);
  }
  return q;
}

CaviResult run_cavi(const TimeSeriesDataset& data, const ModelSpec& spec,
                    const CaviConfig& config) {
  SmartInitResult init = smart_initialize(data, spec, config);
  return continue_cavi(init.params, data, config, config.n_iterations, &init.posterior);
}

}  // namespace hsrdm
