// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "brute_force.hpp"
#include "hsrdm/chain.hpp"
#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

using testing::enumerate;
using testing::random_chain;

class ChainOracle : public ::testing::TestWithParam<std::tuple<int, int, bool>> {};

TEST_P(ChainOracle, SmoothedMarginalsMatchEnumeration) {
  const auto [T, n, normalized] = GetParam();
  Rng rng(1000 + 10 * T + n);
  for (int rep = 0; rep < 5; ++rep) {
    const ChainSpec s = random_chain(T, n, rng, normalized);
    const auto b = enumerate(s);
    const ChainPosterior q = smooth(s);
    EXPECT_NEAR(q.log_normalizer, b.log_normalizer, 1e-10);
    EXPECT_LT((q.unary - b.unary).cwiseAbs().maxCoeff(), 1e-10);
    if (T > 1) {
      EXPECT_LT((Eigen::MatrixXd(q.pairwise) - b.pairwise).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST_P(ChainOracle, FilteredMarginalsMatchEnumeration) {
  const auto [T, n, normalized] = GetParam();
  Rng rng(2000 + 10 * T + n);
  const ChainSpec s = random_chain(T, n, rng, normalized);
  const auto b = enumerate(s);
  const FilterResult f = filter(s);
  EXPECT_LT((f.filtered - b.filtered).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(f.log_normalizer, b.log_normalizer, 1e-10);
}

TEST_P(ChainOracle, ViterbiMatchesEnumeration) {
  const auto [T, n, normalized] = GetParam();
  Rng rng(3000 + 10 * T + n);
  const ChainSpec s = random_chain(T, n, rng, normalized);
  const auto b = enumerate(s);
  const std::vector<int> path = viterbi(s);
  EXPECT_NEAR(path_log_prob(s, path), path_log_prob(s, b.best_path), 1e-10);
}

TEST_P(ChainOracle, EntropyMatchesEnumeration) {
  const auto [T, n, normalized] = GetParam();
  Rng rng(4000 + 10 * T + n);
  const ChainSpec s = random_chain(T, n, rng, normalized);
  const auto b = enumerate(s);
  double h = 0.0;
  testing::for_each_path(T, n, [&](const std::vector<int>& z) {
    const double lp = testing::score_path(s, z, T - 1) - b.log_normalizer;
    h -= std::exp(lp) * lp;
  });
  EXPECT_NEAR(chain_entropy(smooth(s)), h, 1e-10);
}

INSTANTIATE_TEST_SUITE_P(SmallChains, ChainOracle,
                         ::testing::Combine(::testing::Values(1, 2, 4, 6), ::testing::Values(1, 2, 3),
                                            ::testing::Bool()));

TEST(Chain, PairwiseMarginalizesToUnary) {
  Rng rng(9);
  const ChainSpec s = random_chain(30, 4, rng);
  const ChainPosterior q = smooth(s);
  for (int t = 0; t + 1 < 30; ++t)
    for (int i = 0; i < 4; ++i) {
      double out = 0.0, in = 0.0;
      for (int j = 0; j < 4; ++j) {
        out += q.pair(t, i, j);
        in += q.pair(t, j, i);
      }
      EXPECT_NEAR(out, q.unary(t, i), 1e-12);
      EXPECT_NEAR(in, q.unary(t + 1, i), 1e-12);
    }
}

TEST(Chain, LongChainStaysFinite) {
  Rng rng(10);
  ChainSpec s = random_chain(5000, 3, rng);
  s.log_emissions *= 50.0;
  const ChainPosterior q = smooth(s);
  EXPECT_TRUE(std::isfinite(q.log_normalizer));
  EXPECT_TRUE(q.unary.allFinite());
  for (int t = 0; t < 5000; t += 499) EXPECT_NEAR(q.unary.row(t).sum(), 1.0, 1e-9);
}

TEST(Chain, ImpossibleEvidenceDetected) {
  Rng rng(12);
  ChainSpec s = random_chain(4, 2, rng);
  s.log_emissions.row(2).setConstant(-INFINITY);
  try {
    filter(s);
    FAIL() << "expected ImpossibleEvidence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "ImpossibleEvidence");
  }
}

TEST(Chain, PosteriorPathSamplesFollowEnumeration) {
  Rng rng(13);
  const ChainSpec s = random_chain(3, 2, rng);
  const auto b = enumerate(s);
  std::map<std::vector<int>, int> hits;
  const int n = 40000;
  Rng draw(14);
  for (int i = 0; i < n; ++i) ++hits[sample_posterior_path(s, draw)];
  testing::for_each_path(3, 2, [&](const std::vector<int>& z) {
    const double p = std::exp(testing::score_path(s, z, 2) - b.log_normalizer);
    EXPECT_NEAR(hits[z] / double(n), p, 0.01);
  });
}

TEST(Chain, PriorSamplesIgnoreEmissions) {
  ChainSpec s;
  s.n_states = 2;
  s.log_init = Eigen::Vector2d(0.0, -INFINITY);
  s.log_transitions = RowMatrixXd(2, 4);
  s.log_transitions.row(0) << -INFINITY, 0.0, 0.0, -INFINITY;
  s.log_transitions.row(1) << -INFINITY, 0.0, 0.0, -INFINITY;
  s.log_emissions = Eigen::MatrixXd::Zero(3, 2);
  s.log_emissions(1, 1) = -100.0;
  Rng rng(1);
  EXPECT_EQ(sample_chain(s, rng), (std::vector<int>{0, 1, 0}));
}

TEST(Chain, ValidateRejectsUnnormalizedOnlyWhenAsked) {
  Rng rng(15);
  const ChainSpec s = random_chain(4, 3, rng, false);
  EXPECT_THROW(s.validate(true), Error);
  EXPECT_NO_THROW(s.validate(false));
}

TEST(Chain, DegeneratePosteriorIsOneHot) {
  const ChainPosterior q = degenerate_posterior(5);
  EXPECT_EQ(q.n_states(), 1);
  EXPECT_EQ(q.length(), 5);
  EXPECT_DOUBLE_EQ(q.unary.sum(), 5.0);
  EXPECT_DOUBLE_EQ(chain_entropy(q), 0.0);
}

}  // namespace
}  // namespace hsrdm
