// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/chain.hpp"

#include <cmath>
#include <limits>

#include "hsrdm/diagnostics.hpp"
#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// log(1e-300): predicted probabilities below this are treated as zero
constexpr double kLogTiny = -690.7755278982137;

double lse(const double* v, int n) {
  double m = kNegInf;
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

int draw_from_log(const Eigen::Ref<const Eigen::VectorXd>& logp, Rng& rng) {
  const double m = logp.maxCoeff();
  Eigen::VectorXd p = (logp.array() - m).exp();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng) * p.sum();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    u -= p(i);
    if (u < 0.0) return static_cast<int>(i);
  }
  // rounding left u >= 0; return the last state with positive mass
  for (Eigen::Index i = p.size() - 1; i >= 0; --i)
    if (p(i) > 0.0) return static_cast<int>(i);
  return 0;
}

}  // namespace

void ChainSpec::validate(bool require_normalized) const {
  const int T = length();
  if (n_states < 1 || log_init.size() != n_states || log_emissions.cols() != n_states)
    throw Error("FeatureDimMismatch", "chain state count");
  if (T < 1) throw Error("EmptyDataset", "chain of length 0");
  if (log_transitions.rows() != T - 1 || log_transitions.cols() != n_states * n_states)
    throw Error("FeatureDimMismatch", "transition tensor shape");
  if ((log_emissions.array().isNaN()).any() || (log_transitions.array().isNaN()).any())
    throw Error("NonFiniteUtility", "NaN in chain potentials");
  if (!require_normalized) return;
  if (std::abs(std::exp(logsumexp(log_init))- 1.0) > kSimplexTol)
    throw Error("NotNormalized", "init");
  for (int t = 0; t + 1 < T; ++t)
    for (int i = 0; i < n_states; ++i) {
      Eigen::VectorXd row = log_transitions.row(t).segment(i * n_states, n_states).transpose();
      if (std::abs(std::exp(logsumexp(row)) - 1.0) > kSimplexTol)
        throw Error("NotNormalized", "transition row");
    }
}

FilterResult filter(const ChainSpec& spec) {
  const int T = spec.length();
  const int n = spec.n_states;
  FilterResult r;
  r.log_filtered.resize(T, n);
  r.log_predicted.resize(T, n);
  r.log_normalizer = 0.0;
  Eigen::VectorXd joint(n);
  for (int t = 0; t < T; ++t) {
    if (t == 0) {
      r.log_predicted.row(0) = spec.log_init.transpose();
    } else {
      const auto A = spec.transition_matrix(t - 1);
      for (int j = 0; j < n; ++j) {
        double m = kNegInf;
        for (int i = 0; i < n; ++i) m = std::max(m, r.log_filtered(t - 1, i) + A(i, j));
        if (m == kNegInf) {
          r.log_predicted(t, j) = kNegInf;
          continue;
        }
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::exp(r.log_filtered(t - 1, i) + A(i, j) - m);
        r.log_predicted(t, j) = m + std::log(s);
      }
    }
    joint = r.log_predicted.row(t).transpose() + spec.log_emissions.row(t).transpose();
    const double c = lse(joint.data(), n);
    if (!std::isfinite(c)) throw Error("ImpossibleEvidence", "at t=" + std::to_string(t));
    r.log_filtered.row(t) = (joint.array() - c).matrix().transpose();
    r.log_normalizer += c;
  }
  r.filtered = r.log_filtered.array().exp();
  r.predicted.resize(T, n);
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd row = r.log_predicted.row(t).transpose();
    r.predicted.row(t) = (row.array() - lse(row.data(), n)).exp().matrix().transpose();
  }
  return r;
}

ChainPosterior smooth(const ChainSpec& spec) { return smooth(spec, filter(spec)); }

ChainPosterior smooth(const ChainSpec& spec, const FilterResult& f) {
  const int T = spec.length();
  const int n = spec.n_states;
  ChainPosterior post;
  post.log_normalizer = f.log_normalizer;
  post.unary.resize(T, n);
  post.pairwise.resize(std::max(0, T - 1), n * n);
  Eigen::VectorXd log_next = f.log_filtered.row(T - 1).transpose();
  post.unary.row(T - 1) = f.filtered.row(T - 1);

  Eigen::VectorXd quotient(n);
  Eigen::VectorXd slab(n * n);
  for (int t = T - 2; t >= 0; --t) {
    // ln[xi_{t+1|T} / xi_{t+1|t}], dropping vanishing predictions
    Eigen::VectorXd pred_row = f.log_predicted.row(t + 1).transpose();
    const double pred_norm = lse(pred_row.data(), n);
    for (int j = 0; j < n; ++j) {
      if (pred_row(j) - pred_norm < kLogTiny) {
        if (log_next(j) != kNegInf) diagnostics().dropped_quotients++;
        quotient(j) = kNegInf;
      } else {
        quotient(j) = log_next(j) - pred_row(j);
      }
    }
    const auto A = spec.transition_matrix(t);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double q = quotient(j);
        slab(i * n + j) = (q == kNegInf || A(i, j) == kNegInf || f.log_filtered(t, i) == kNegInf)
                              ? kNegInf
                              : f.log_filtered(t, i) + A(i, j) + q;
      }
    const double z = lse(slab.data(), n * n);
    if (!std::isfinite(z)) throw Error("ImpossibleEvidence", "smoothing at t=" + std::to_string(t));
    slab = (slab.array() - z).exp();
    post.pairwise.row(t) = slab.transpose();
    for (int i = 0; i < n; ++i) {
      post.unary(t, i) = slab.segment(i * n, n).sum();
      log_next(i) = post.unary(t, i) > 0.0 ? std::log(post.unary(t, i)) : kNegInf;
    }
  }
  return post;
}

double chain_entropy(const ChainPosterior& post) {
  const int T = post.length();
  const int n = post.n_states();
  double h = 0.0;
  for (int k = 0; k < n; ++k) {
    const double q = post.unary(0, k);
    if (q > 0.0) h -= q * std::log(q);
  }
  for (int t = 0; t + 1 < T; ++t)
    for (int i = 0; i < n; ++i) {
      const double qi = post.unary(t, i);
      if (qi <= 0.0) continue;
      for (int j = 0; j < n; ++j) {
        const double p = post.pairwise(t, i * n + j);
        if (p > 0.0) h -= p * std::log(p / qi);
      }
    }
  return std::max(0.0, h);
}

std::vector<int> viterbi(const ChainSpec& spec) {
  const int T = spec.length();
  const int n = spec.n_states;
  Eigen::MatrixXd delta(T, n);
  Eigen::MatrixXi back(T, n);
  delta.row(0) = (spec.log_init + spec.log_emissions.row(0).transpose()).transpose();
  for (int t = 1; t < T; ++t) {
    const auto A = spec.transition_matrix(t - 1);
    for (int j = 0; j < n; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (int i = 0; i < n; ++i) {
        const double v = delta(t - 1, i) + A(i, j);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      delta(t, j) = best + spec.log_emissions(t, j);
      back(t, j) = arg;
    }
  }
  std::vector<int> path(T, 0);
  double best = kNegInf;
  for (int k = 0; k < n; ++k)
    if (delta(T - 1, k) > best) {
      best = delta(T - 1, k);
      path[T - 1] = k;
    }
  for (int t = T - 1; t > 0; --t) path[t - 1] = back(t, path[t]);
  return path;
}

std::vector<int> sample_chain(const ChainSpec& spec, Rng& rng) {
  const int T = spec.length();
  const int n = spec.n_states;
  std::vector<int> path(T, 0);
  path[0] = draw_from_log(spec.log_init, rng);
  for (int t = 1; t < T; ++t)
    path[t] = draw_from_log(spec.log_transitions.row(t - 1).segment(path[t - 1] * n, n).transpose(), rng);
  return path;
}

std::vector<int> sample_posterior_path(const ChainSpec& spec, Rng& rng) {
  const FilterResult f = filter(spec);
  const int T = spec.length();
  const int n = spec.n_states;
  std::vector<int> path(T, 0);
  path[T - 1] = draw_from_log(f.log_filtered.row(T - 1).transpose(), rng);
  Eigen::VectorXd w(n);
  for (int t = T - 2; t >= 0; --t) {
    for (int i = 0; i < n; ++i) w(i) = f.log_filtered(t, i) + spec.log_transition(t, i, path[t + 1]);
    path[t] = draw_from_log(w, rng);
  }
  return path;
}

double path_log_prob(const ChainSpec& spec, const std::vector<int>& path) {
  double lp = spec.log_init(path[0]) + spec.log_emissions(0, path[0]);
  for (int t = 1; t < spec.length(); ++t)
    lp += spec.log_transition(t - 1, path[t - 1], path[t]) + spec.log_emissions(t, path[t]);
  return lp;
}

ChainPosterior degenerate_posterior(int T) {
  ChainPosterior p;
  p.unary = Eigen::MatrixXd::Ones(T, 1);
  p.pairwise = RowMatrixXd::Ones(std::max(0, T - 1), 1);
  p.log_normalizer = 0.0;
  return p;
}

}  // namespace hsrdm
