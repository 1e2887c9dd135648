// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <limits>

#include "hsrdm/core_math.hpp"
#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

using Eigen::Index;

Eigen::MatrixXd plus_plus_seeds(const Eigen::Ref<const Eigen::MatrixXd>& x, int k,
                                Rng& rng) {
  const Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  Eigen::VectorXd d2(n);
  for (Index i = 0; i < n; ++i) d2(i) = (x.row(i) - centers.row(0)).squaredNorm();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total > 0.0) {
      double u = unif(rng) * total;
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        u -= d2(i);
        if (u < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = x.row(chosen);
    for (Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (x.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

// Assigns each point to its nearest center (ties to the lower index);
// returns the objective.
// x_t is d x n (one point per column).
double assign(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& centers,
              std::vector<int>& labels, Eigen::VectorXd& dist) {
  const Eigen::MatrixXd c_t = centers.transpose();
  const Index d = x_t.rows();
  double obj = 0.0;
  for (Index i = 0; i < x_t.cols(); ++i) {
    const double* xi = x_t.col(i).data();
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Index c = 0; c < c_t.cols(); ++c) {
      const double* cc = c_t.col(c).data();
      double dd = 0.0;
      for (Index q = 0; q < d; ++q) {
        const double diff = xi[q] - cc[q];
        dd += diff * diff;
      }
      if (dd < best) {
        best = dd;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    dist(i) = best;
    obj += best;
  }
  return obj;
}

KMeansResult lloyd(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::MatrixXd& x_t, int k,
                   Rng& rng, int max_iterations) {
  const Index n = x.rows();
  KMeansResult r;
  r.centers = plus_plus_seeds(x, k, rng);
  r.labels.assign(n, 0);
  Eigen::VectorXd dist(n);
  double obj = assign(x_t, r.centers, r.labels, dist);
  r.objective_trace.push_back(obj);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<Index> counts(k, 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(r.labels[i]) += x_t.col(i).transpose();
      ++counts[r.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        r.centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // reseed an empty cluster at the point farthest from its center
        Index far = 0;
        dist.maxCoeff(&far);
        r.centers.row(c) = x.row(far);
        dist(far) = 0.0;
      }
    }
    const double next = assign(x_t, r.centers, r.labels, dist);
    r.objective_trace.push_back(next);
    if (next >= obj) {
      obj = next;
      break;
    }
    obj = next;
  }
  // centers as exact means of the final assignment
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
  std::vector<Index> counts(k, 0);
  for (Index i = 0; i < n; ++i) {
    sums.row(r.labels[i]) += x_t.col(i).transpose();
    ++counts[r.labels[i]];
  }
  for (int c = 0; c < k; ++c)
    if (counts[c] > 0) r.centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
  r.objective = 0.0;
  for (Index i = 0; i < n; ++i)
    r.objective += (x.row(i) - r.centers.row(r.labels[i])).squaredNorm();
  return r;
}

}  // namespace

KMeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, int k,
                    std::uint64_t seed, int restarts, int max_iterations) {
  if (k < 1) throw Error("TooFewPoints", "k must be positive");
  if (k > points.rows()) throw Error("TooFewPoints", "k exceeds number of points");
  Rng rng(seed);
  KMeansResult best;
  best.objective = std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd points_t = points.transpose();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    KMeansResult cand = lloyd(points, points_t, k, rng, max_iterations);
    if (cand.objective < best.objective) best = std::move(cand);
  }
  return best;
}

}  // namespace hsrdm
