// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

// Path-enumeration oracles for small chains, shared by unit and acceptance
// tests.
#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "hsrdm/chain.hpp"
#include "hsrdm/core_math.hpp"

namespace hsrdm::testing {

struct BruteForce {
  double log_normalizer = 0.0;
  Eigen::MatrixXd unary;     // T x n
  Eigen::MatrixXd pairwise;  // (T-1) x n*n
  std::vector<int> best_path;
  // filtered(t) = p(z_t | x_0..t), from prefix enumeration
  Eigen::MatrixXd filtered;
};

inline double score_path(const ChainSpec& s, const std::vector<int>& z, int upto) {
  double v = s.log_init(z[0]) + s.log_emissions(0, z[0]);
  for (int t = 1; t <= upto; ++t) v += s.log_transition(t - 1, z[t - 1], z[t]) + s.log_emissions(t, z[t]);
  return v;
}

// Visits every path of length T over n states.
template <class Fn>
void for_each_path(int T, int n, Fn&& fn) {
  std::vector<int> z(T, 0);
  while (true) {
    fn(z);
    int i = T - 1;
    while (i >= 0 && ++z[i] == n) z[i--] = 0;
    if (i < 0) return;
  }
}

inline BruteForce enumerate(const ChainSpec& s) {
  const int T = s.length();
  const int n = s.n_states;
  BruteForce b;
  b.unary = Eigen::MatrixXd::Zero(T, n);
  b.pairwise = Eigen::MatrixXd::Zero(std::max(T - 1, 0), n * n);
  b.filtered = Eigen::MatrixXd::Zero(T, n);
  std::vector<double> scores;
  std::vector<std::vector<int>> paths;
  for_each_path(T, n, [&](const std::vector<int>& z) {
    scores.push_back(score_path(s, z, T - 1));
    paths.push_back(z);
  });
  const Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(scores.data(), scores.size());
  b.log_normalizer = logsumexp(v);
  double best = -INFINITY;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const double w = std::exp(scores[p] - b.log_normalizer);
    const auto& z = paths[p];
    for (int t = 0; t < T; ++t) b.unary(t, z[t]) += w;
    for (int t = 0; t + 1 < T; ++t) b.pairwise(t, z[t] * n + z[t + 1]) += w;
    if (scores[p] > best + 1e-12) {
      best = scores[p];
      b.best_path = z;
    }
  }
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd mass = Eigen::VectorXd::Constant(n, -INFINITY);
    for_each_path(t + 1, n, [&](const std::vector<int>& z) {
      const double sc = score_path(s, z, t);
      mass(z[t]) = std::log(std::exp(mass(z[t])) + std::exp(sc));
    });
    b.filtered.row(t) = (mass.array() - logsumexp(mass)).exp().transpose();
  }
  return b;
}

// Random normalized chain with arbitrary emissions.
inline ChainSpec random_chain(int T, int n, Rng& rng, bool normalized = true) {
  std::normal_distribution<double> g(0.0, 1.0);
  ChainSpec s;
  s.n_states = n;
  s.log_init = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
  if (normalized) s.log_init = log_softmax(s.log_init);
  s.log_transitions = RowMatrixXd(std::max(T - 1, 0), n * n);
  for (int t = 0; t + 1 < T; ++t)
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd row = Eigen::VectorXd::NullaryExpr(n, [&] { return 1.5 * g(rng); });
      if (normalized) row = log_softmax(row);
      for (int j = 0; j < n; ++j) s.log_transitions(t, i * n + j) = row(j);
    }
  s.log_emissions = Eigen::MatrixXd::NullaryExpr(T, n, [&] { return 2.0 * g(rng); });
  return s;
}

}  // namespace hsrdm::testing
