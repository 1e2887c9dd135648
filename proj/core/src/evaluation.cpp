// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsrdm/core_math.hpp"
#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

void check_shapes(const Eigen::Ref<const Eigen::MatrixXd>& a,
                  const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error("ShapeMismatch", "forecast and truth differ in shape");
  if (a.size() == 0) throw Error("ShapeMismatch", "empty trajectories");
}

}  // namespace

double forecast_mse(const Eigen::Ref<const Eigen::MatrixXd>& forecast,
                    const Eigen::Ref<const Eigen::MatrixXd>& truth) {
  check_shapes(forecast, truth);
  return (forecast - truth).squaredNorm() / static_cast<double>(forecast.size());
}

double mean_forecast_error(const Eigen::Ref<const Eigen::MatrixXd>& forecast,
                           const Eigen::Ref<const Eigen::MatrixXd>& truth) {
  check_shapes(forecast, truth);
  return (forecast - truth).rowwise().norm().mean();
}

SegmentationScore segmentation_accuracy(const std::vector<int>& predicted,
                                        const std::vector<int>& truth, int n_states) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw Error("ShapeMismatch", "label sequences differ in length");
  if (n_states < 1) throw Error("OutOfRange", "n_states must be positive");
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(n_states, n_states);
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (predicted[t] < 0 || predicted[t] >= n_states || truth[t] < 0 || truth[t] >= n_states)
      throw Error("OutOfRange", "label out of range");
    confusion(predicted[t], truth[t]) += 1.0;
  }
  SegmentationScore s;
  s.permutation = munkres_align(confusion);
  double hits = 0.0;
  for (int i = 0; i < n_states; ++i) hits += confusion(i, s.permutation[i]);
  s.accuracy = hits / static_cast<double>(truth.size());
  return s;
}

std::vector<int> cluster_entity_states(const Eigen::Ref<const Eigen::MatrixXi>& entity_states,
                                       int n_entity_states, int n_clusters, std::uint64_t seed) {
  const Eigen::Index T = entity_states.rows();
  const Eigen::Index J = entity_states.cols();
  if (n_entity_states < 1) throw Error("OutOfRange", "n_entity_states must be positive");
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(T, J * n_entity_states);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index j = 0; j < J; ++j) {
      const int k = entity_states(t, j);
      if (k < 0 || k >= n_entity_states) throw Error("OutOfRange", "entity state out of range");
      onehot(t, j * n_entity_states + k) = 1.0;
    }
  return kmeans(onehot, n_clusters, seed).labels;
}

double directional_variation(const std::vector<Eigen::MatrixXd>& trajectories) {
  double c = 0.0, s = 0.0;
  int n = 0;
  for (const auto& x : trajectories) {
    if (x.cols() != 2 || x.rows() < 2) throw Error("ShapeMismatch", "need (u+1) x 2 with u >= 1");
    const Eigen::Vector2d d = (x.row(x.rows() - 1) - x.row(0)).transpose();
    const double norm = d.norm();
    if (norm == 0.0) continue;
    c += d.x() / norm;
    s += d.y() / norm;
    ++n;
  }
  if (n == 0) throw Error("NoDisplacement", "no entity moved over the horizon");
  const double r = std::hypot(c, s) / n;
  return std::clamp(1.0 - r, 0.0, 1.0);
}

double pct_in_bounds(const std::vector<Eigen::MatrixXd>& trajectories, const Box& box) {
  if (box.lower.size() != box.upper.size() || (box.lower.array() > box.upper.array()).any())
    throw Error("InvalidConfig", "bounding box is malformed");
  long inside = 0, total = 0;
  for (const auto& x : trajectories) {
    if (x.cols() != box.lower.size()) throw Error("ShapeMismatch", "box and trajectory dimensions");
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      const auto row = x.row(t).transpose().array();
      inside += ((row >= box.lower.array()).all() && (row <= box.upper.array()).all()) ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(total);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("EmptyWeightSet", "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ForecastSummary summarize_forecasts(const std::vector<std::vector<double>>& mse) {
  ForecastSummary out;
  out.best_mse = std::numeric_limits<double>::infinity();
  std::vector<double> trial_means;
  for (std::size_t i = 0; i < mse.size(); ++i) {
    if (mse[i].empty()) throw Error("EmptyWeightSet", "trial without samples");
    double sum = 0.0;
    for (double v : mse[i]) {
      sum += v;
      if (v < out.best_mse) {
        out.best_mse = v;
        out.best_trial = static_cast<int>(i);
      }
    }
    trial_means.push_back(sum / mse[i].size());
  }
  out.median_trial_mean = median(trial_means);
  const auto& best = mse[out.best_trial];
  const double n = static_cast<double>(best.size());
  out.best_trial_mean = trial_means[out.best_trial];
  if (best.size() > 1) {
    double ss = 0.0;
    for (double v : best) ss += (v - out.best_trial_mean) * (v - out.best_trial_mean);
    out.best_trial_se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

}  // namespace hsrdm
