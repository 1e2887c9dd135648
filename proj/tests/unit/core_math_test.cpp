// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "hsrdm/core_math.hpp"
#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

template <class F>
std::string error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

TEST(LogSumExp, MatchesDirectSumOnModerateValues) {
  Eigen::Vector3d v(0.3, -1.2, 2.0);
  const double direct = std::log(std::exp(0.3) + std::exp(-1.2) + std::exp(2.0));
  EXPECT_NEAR(logsumexp(v), direct, 1e-14);
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  EXPECT_NEAR(logsumexp(Eigen::Vector2d(1000.0, 1000.0)), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_NEAR(logsumexp(Eigen::Vector2d(-1000.0, -1000.0)), -1000.0 + std::log(2.0), 1e-12);
}

TEST(LogSumExp, AllNegativeInfinityIsNegativeInfinity) {
  EXPECT_EQ(logsumexp(Eigen::Vector2d(-INFINITY, -INFINITY)), -INFINITY);
}

TEST(LogSoftmax, ExponentiatesToSimplex) {
  Eigen::VectorXd u(4);
  u << 3.0, -7.0, 0.5, 0.5;
  const Eigen::VectorXd lp = log_softmax(u);
  EXPECT_NEAR(lp.array().exp().sum(), 1.0, 1e-14);
  EXPECT_NEAR(lp(2), lp(3), 1e-15);
  EXPECT_NEAR(lp(0) - lp(1), 10.0, 1e-12);
}

TEST(LogSoftmax, RejectsNonFinite) {
  EXPECT_EQ(error_code([] { log_softmax(Eigen::Vector2d(NAN, 0.0)); }), "NonFiniteUtility");
  EXPECT_EQ(error_code([] { log_softmax(Eigen::Vector2d(INFINITY, 0.0)); }), "NonFiniteUtility");
}

TEST(NormalizeLogRows, EveryRowSumsToOne) {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, -5, 0, 5;
  const LogTPM p = normalize_log_rows(m);
  for (int r = 0; r < 2; ++r) EXPECT_NEAR(p.row(r).array().exp().sum(), 1.0, 1e-14);
}

TEST(WrapAngle, LandsInHalfOpenInterval) {
  for (double a : {-10.0, -M_PI, 0.0, 3.0, M_PI, 7.5, 100.0}) {
    const double w = wrap_angle(a);
    EXPECT_GE(w, -M_PI);
    EXPECT_LT(w, M_PI);
    EXPECT_NEAR(std::remainder(w - a, 2.0 * M_PI), 0.0, 1e-12);
  }
}

TEST(MixSeed, DeterministicAndStreamSensitive) {
  EXPECT_EQ(mix_seed(120, 3), mix_seed(120, 3));
  EXPECT_NE(mix_seed(120, 3), mix_seed(120, 4));
  EXPECT_NE(mix_seed(120, 3), mix_seed(121, 3));
}

TEST(StickyDirichlet, ConcentrationAddsKappaOnSelf) {
  StickyDirichletPrior p{1.0, 50.0, 3};
  const Eigen::VectorXd c = p.concentration(1);
  EXPECT_DOUBLE_EQ(c(0), 1.0);
  EXPECT_DOUBLE_EQ(c(1), 51.0);
  EXPECT_DOUBLE_EQ(c(2), 1.0);
}

TEST(StickyDirichlet, LogDensityMatchesGammaFormula) {
  StickyDirichletPrior p{2.0, 5.0, 3};
  Eigen::Vector3d row(0.2, 0.7, 0.1);
  const Eigen::Vector3d c(2.0, 7.0, 2.0);
  double oracle = std::lgamma(c.sum());
  for (int i = 0; i < 3; ++i) oracle += (c(i) - 1.0) * std::log(row(i)) - std::lgamma(c(i));
  EXPECT_NEAR(sticky_dirichlet_log_density(p, row, 1), oracle, 1e-12);
  EXPECT_NEAR(dirichlet_log_density(c, row), oracle, 1e-12);
}

TEST(StickyDirichlet, BoundaryPointRejected) {
  StickyDirichletPrior p{1.0, 10.0, 2};
  EXPECT_EQ(error_code([&] { sticky_dirichlet_log_density(p, Eigen::Vector2d(1.0, 0.0), 0); }),
            "BoundarySimplexPoint");
}

TEST(StickyDirichlet, InvalidHyperparametersRejected) {
  EXPECT_FALSE(error_code([] { StickyDirichletPrior{0.0, 1.0, 2}.validate(); }).empty());
  EXPECT_FALSE(error_code([] { StickyDirichletPrior{1.0, -1.0, 2}.validate(); }).empty());
}

TEST(SampleDirichlet, EmpiricalMeanMatchesConcentration) {
  Rng rng(7);
  const Eigen::Vector3d c(1.0, 3.0, 6.0);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd d = sample_dirichlet(c, rng);
    ASSERT_TRUE(is_prob_vector(d));
    mean += d;
  }
  mean /= n;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(mean(i), c(i) / c.sum(), 0.01);
}

TEST(SampleLogCategorical, FrequenciesFollowWeights) {
  Rng rng(11);
  const Eigen::Vector3d lw = Eigen::Vector3d(0.2, 0.3, 0.5).array().log() + 4.0;
  std::array<int, 3> hits{};
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++hits[sample_log_categorical(lw, rng)];
  EXPECT_NEAR(hits[0] / double(n), 0.2, 0.01);
  EXPECT_NEAR(hits[1] / double(n), 0.3, 0.01);
  EXPECT_NEAR(hits[2] / double(n), 0.5, 0.01);
}

TEST(SampleLogCategorical, NeverPicksZeroWeight) {
  Rng rng(1);
  const Eigen::Vector3d lw(-INFINITY, 0.0, -INFINITY);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_log_categorical(lw, rng), 1);
}

Eigen::MatrixXd three_blobs(Rng& rng, int per) {
  std::normal_distribution<double> g(0.0, 0.1);
  const Eigen::Vector2d centers[3] = {{0, 0}, {5, 5}, {-5, 5}};
  Eigen::MatrixXd x(3 * per, 2);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per; ++i) x.row(c * per + i) = (centers[c] + Eigen::Vector2d(g(rng), g(rng))).transpose();
  return x;
}

TEST(KMeans, RecoversSeparatedBlobs) {
  Rng rng(3);
  const Eigen::MatrixXd x = three_blobs(rng, 40);
  const KMeansResult r = kmeans(x, 3, 120);
  for (int c = 0; c < 3; ++c)
    for (int i = 1; i < 40; ++i) EXPECT_EQ(r.labels[c * 40 + i], r.labels[c * 40]);
  EXPECT_NE(r.labels[0], r.labels[40]);
  EXPECT_NE(r.labels[40], r.labels[80]);
  EXPECT_NE(r.labels[0], r.labels[80]);
}

TEST(KMeans, ObjectiveTraceNeverIncreases) {
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(200, 3, [&] { return g(rng); });
  const KMeansResult r = kmeans(x, 5, 9);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
    EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] + 1e-9);
  // Objective equals the sum of squared distances to assigned centers.
  double sse = 0.0;
  for (int i = 0; i < x.rows(); ++i) sse += (x.row(i) - r.centers.row(r.labels[i])).squaredNorm();
  EXPECT_NEAR(r.objective, sse, 1e-8 * (1.0 + sse));
}

TEST(KMeans, SameSeedSameLabels) {
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(100, 2, [&] { return g(rng); });
  EXPECT_EQ(kmeans(x, 4, 42).labels, kmeans(x, 4, 42).labels);
}

TEST(KMeans, TooFewPoints) {
  EXPECT_EQ(error_code([] { kmeans(Eigen::MatrixXd::Zero(2, 2), 3, 1); }), "TooFewPoints");
}

TEST(Munkres, MatchesExhaustiveSearch) {
  Rng rng(17);
  std::uniform_int_distribution<int> u(0, 50);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    const Eigen::MatrixXd c = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return double(u(rng)); });
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    do {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += c(i, perm[i]);
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const std::vector<int> got = munkres_align(c);
    double s = 0.0;
    std::vector<int> sorted = got;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(sorted[i], i);
      s += c(i, got[i]);
    }
    EXPECT_DOUBLE_EQ(s, best);
  }
}

TEST(Munkres, IdentityOnDiagonalConfusion) {
  const Eigen::MatrixXd c = Eigen::Vector3d(5, 7, 9).asDiagonal();
  EXPECT_EQ(munkres_align(c), (std::vector<int>{0, 1, 2}));
}

TEST(Munkres, NonSquareRejected) {
  EXPECT_EQ(error_code([] { munkres_align(Eigen::MatrixXd::Zero(2, 3)); }), "NonSquareConfusion");
}

}  // namespace
}  // namespace hsrdm
