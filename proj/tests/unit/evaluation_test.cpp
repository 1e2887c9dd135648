// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "hsrdm/evaluation.hpp"

namespace hsrdm {
namespace {

double brute_accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    int hit = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) hit += perm[pred[t]] == truth[t];
    best = std::max(best, static_cast<double>(hit) / pred.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

TEST(Segmentation, MatchesPermutationSearch) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    std::vector<int> truth(200), pred(200);
    for (int t = 0; t < 200; ++t) {
      truth[t] = static_cast<int>(rng() % n);
      pred[t] = rng() % 3 == 0 ? static_cast<int>(rng() % n) : (truth[t] + 1) % n;
    }
    const SegmentationScore s = segmentation_accuracy(pred, truth, n);
    EXPECT_NEAR(s.accuracy, brute_accuracy(pred, truth, n), 1e-12);
    int hit = 0;
    for (int t = 0; t < 200; ++t) hit += s.permutation[pred[t]] == truth[t];
    EXPECT_NEAR(s.accuracy, hit / 200.0, 1e-12);
  }
}

TEST(Segmentation, InvariantToRelabeling) {
  const std::vector<int> truth = {0, 0, 1, 1, 2, 2, 2, 0};
  std::vector<int> pred = {2, 2, 0, 0, 1, 1, 0, 2};
  const double a = segmentation_accuracy(pred, truth, 3).accuracy;
  for (int& p : pred) p = (p + 1) % 3;
  EXPECT_DOUBLE_EQ(segmentation_accuracy(pred, truth, 3).accuracy, a);
  EXPECT_DOUBLE_EQ(a, 7.0 / 8.0);
  EXPECT_DOUBLE_EQ(segmentation_accuracy(truth, truth, 3).accuracy, 1.0);
}

TEST(Forecast, MseAndMeanError) {
  Eigen::MatrixXd f(2, 2), t(2, 2);
  f << 0, 0, 1, 1;
  t << 3, 4, 1, 1;
  EXPECT_DOUBLE_EQ(forecast_mse(f, t), 25.0 / 4.0);
  EXPECT_DOUBLE_EQ(mean_forecast_error(f, t), 2.5);
  EXPECT_DOUBLE_EQ(forecast_mse(t, t), 0.0);
}

TEST(Forecast, SummaryByHand) {
  const std::vector<std::vector<double>> mse = {{0.5, 0.3, 0.4}, {0.2, 0.9, 0.7}, {1.0, 1.0, 1.0}};
  const ForecastSummary s = summarize_forecasts(mse);
  EXPECT_DOUBLE_EQ(s.best_mse, 0.2);
  EXPECT_EQ(s.best_trial, 1);
  EXPECT_DOUBLE_EQ(s.best_trial_mean, 0.6);
  const double sd = std::sqrt((0.16 + 0.09 + 0.01) / 2.0);
  EXPECT_NEAR(s.best_trial_se, sd / std::sqrt(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(s.median_trial_mean, 0.6);
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0, 10.0}), 2.5);
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
}

Eigen::MatrixXd segment(double x0, double y0, double x1, double y1) {
  Eigen::MatrixXd m(2, 2);
  m << x0, y0, x1, y1;
  return m;
}

TEST(DirectionalVariation, Extremes) {
  EXPECT_NEAR(directional_variation({segment(0, 0, 1, 1), segment(2, 2, 5, 5)}), 0.0, 1e-12);
  EXPECT_NEAR(directional_variation({segment(0, 0, 1, 0), segment(0, 0, -1, 0)}), 1.0, 1e-12);
  EXPECT_NEAR(directional_variation({segment(0, 0, 1, 0), segment(0, 0, 0, 1)}),
              1.0 - std::sqrt(0.5), 1e-12);
}

TEST(InBounds, CountsRows) {
  Eigen::MatrixXd a(3, 2), b(1, 2);
  a << 0.5, 0.5, 1.2, 0.5, 0.0, 1.0;
  b << -0.1, 0.3;
  EXPECT_DOUBLE_EQ(pct_in_bounds({a, b}, unit_square()), 0.5);
}

TEST(ClusterEntityStates, RecoversJointPatterns) {
  // Two entities whose joint state pattern defines three regimes.
  Eigen::MatrixXi z(90, 2);
  std::vector<int> truth(90);
  for (int t = 0; t < 90; ++t) {
    truth[t] = t / 30;
    z(t, 0) = truth[t] == 2 ? 1 : 0;
    z(t, 1) = truth[t] == 1 ? 1 : 0;
  }
  const std::vector<int> labels = cluster_entity_states(z, 2, 3, 4);
  EXPECT_DOUBLE_EQ(segmentation_accuracy(labels, truth, 3).accuracy, 1.0);
}

}  // namespace
}  // namespace hsrdm
