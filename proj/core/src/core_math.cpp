// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/core_math.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hsrdm/diagnostics.hpp"
#include "hsrdm/error.hpp"

namespace hsrdm {

Diagnostics& diagnostics() {
  static Diagnostics d;
  return d;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double logsumexp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& utilities) {
  if (utilities.size() == 0) throw Error("NonFiniteUtility", "empty utility vector");
  if (!utilities.allFinite()) throw Error("NonFiniteUtility");
  return utilities.array() - logsumexp(utilities);
}

LogTPM normalize_log_rows(const Eigen::Ref<const Eigen::MatrixXd>& log_potentials) {
  LogTPM out(log_potentials.rows(), log_potentials.cols());
  for (Eigen::Index r = 0; r < log_potentials.rows(); ++r) {
    Eigen::VectorXd row = log_potentials.row(r).transpose();
    out.row(r) = (row.array() - logsumexp(row)).matrix().transpose();
  }
  return out;
}

bool is_prob_vector(const Eigen::Ref<const Eigen::VectorXd>& p, double tol) {
  if (p.size() == 0 || !p.allFinite()) return false;
  if ((p.array() < 0.0).any()) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(radians + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  if (w >= std::numbers::pi) w -= two_pi;
  return w;
}

void StickyDirichletPrior::validate() const {
  if (!(alpha > 0.0) || !(kappa >= 0.0) || n < 1)
    throw Error("InvalidPrior", "need alpha > 0, kappa >= 0, n >= 1");
}

Eigen::VectorXd StickyDirichletPrior::concentration(int self_index) const {
  Eigen::VectorXd c = Eigen::VectorXd::Constant(n, alpha);
  c(self_index) += kappa;
  return c;
}

double dirichlet_log_density(const Eigen::Ref<const Eigen::VectorXd>& concentration,
                             const Eigen::Ref<const Eigen::VectorXd>& point) {
  if ((point.array() <= 0.0).any()) throw Error("BoundarySimplexPoint");
  double lp = std::lgamma(concentration.sum());
  for (Eigen::Index i = 0; i < concentration.size(); ++i)
    lp += (concentration(i) - 1.0) * std::log(point(i)) - std::lgamma(concentration(i));
  return lp;
}

double sticky_dirichlet_log_density(const StickyDirichletPrior& prior,
                                    const Eigen::Ref<const Eigen::VectorXd>& row,
                                    int self_index) {
  prior.validate();
  if (row.size() != prior.n || self_index < 0 || self_index >= prior.n)
    throw Error("FeatureDimMismatch", "row size or self index does not match prior");
  return dirichlet_log_density(prior.concentration(self_index), row);
}

Eigen::VectorXd sample_dirichlet(const Eigen::Ref<const Eigen::VectorXd>& concentration,
                                 Rng& rng) {
  Eigen::VectorXd g(concentration.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    std::gamma_distribution<double> gamma(concentration(i), 1.0);
    g(i) = gamma(rng);
  }
  const double total = g.sum();
  if (total <= 0.0) {
    // every draw underflowed; fall back to the mean
    return concentration / concentration.sum();
  }
  return g / total;
}

Eigen::VectorXd sample_sticky_dirichlet(const StickyDirichletPrior& prior,
                                        int self_index, Rng& rng) {
  prior.validate();
  return sample_dirichlet(prior.concentration(self_index), rng);
}

int sample_log_categorical(const Eigen::Ref<const Eigen::VectorXd>& log_weights, Rng& rng) {
  const double m = log_weights.maxCoeff();
  const Eigen::VectorXd p = (log_weights.array() - m).exp();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng) * p.sum();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    u -= p(i);
    if (u < 0.0) return static_cast<int>(i);
  }
  for (Eigen::Index i = p.size() - 1; i >= 0; --i)
    if (p(i) > 0.0) return static_cast<int>(i);
  return 0;
}

}  // namespace hsrdm
