// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/catglm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

// theta layout: one block of size n + d per next state a, holding
// log_tpm(:, a) followed by weights(a, :).
struct Layout {
  int n;
  int d;
  int block() const { return n + d; }
  int size() const { return n * block(); }
};

Eigen::VectorXd pack(const Layout& L, const LogTPM& tpm, const Eigen::MatrixXd& w) {
  Eigen::VectorXd theta(L.size());
  for (int a = 0; a < L.n; ++a) {
    theta.segment(a * L.block(), L.n) = tpm.col(a);
    if (L.d > 0) theta.segment(a * L.block() + L.n, L.d) = w.row(a).transpose();
  }
  return theta;
}

void unpack(const Layout& L, const Eigen::VectorXd& theta, LogTPM& tpm, Eigen::MatrixXd& w) {
  tpm.resize(L.n, L.n);
  w.resize(L.n, L.d);
  for (int a = 0; a < L.n; ++a) {
    tpm.col(a) = theta.segment(a * L.block(), L.n);
    if (L.d > 0) w.row(a) = theta.segment(a * L.block() + L.n, L.d).transpose();
  }
}

void normalize_rows(LogTPM& tpm) {
  for (Eigen::Index r = 0; r < tpm.rows(); ++r) {
    const Eigen::VectorXd row = tpm.row(r).transpose();
    tpm.row(r).array() -= logsumexp(row);
  }
}

struct Workspace {
  std::vector<double> u, p, v, vv, g_blocks, h_blocks;
};

// Adds one point's objective and, when requested, its derivatives in the
// compact per-k layout: for next state a, slot (a, 0) is log_tpm(k, a) and
// slot (a, 1 + q) is weights(a, q).
inline double accumulate_point(int n, int d, int k, const double* __restrict tpm_r,
                               const double* __restrict w_r, const double* __restrict f,
                               const double* __restrict c, double* __restrict u,
                               double* __restrict p, double* __restrict v, double* __restrict vv,
                               double* __restrict g, double* __restrict H) {
  const int nz = 1 + d;
  double m = 0.0;
  double umax = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a) {
    m += c[a];
    double val = tpm_r[k * n + a];
    if (f)
      for (int q = 0; q < d; ++q) val += w_r[a * d + q] * f[q];
    u[a] = val;
    umax = std::max(umax, val);
  }
  double s = 0.0;
  for (int a = 0; a < n; ++a) {
    p[a] = std::exp(u[a] - umax);
    s += p[a];
  }
  const double lse = umax + std::log(s);
  const double inv = 1.0 / s;
  double total = 0.0;
  for (int a = 0; a < n; ++a) {
    if (c[a] != 0.0) total += c[a] * (u[a] - lse);
    p[a] *= inv;
  }
  if (!g && !H) return total;
  v[0] = 1.0;
  for (int q = 0; q < d; ++q) v[1 + q] = f ? f[q] : 0.0;
  if (g)
    for (int a = 0; a < n; ++a) {
      const double ra = c[a] - m * p[a];
      for (int i = 0; i < nz; ++i) g[a * nz + i] += ra * v[i];
    }
  if (H) {
    // H holds, per unordered pair a <= b, the upper triangle of
    // sum h_ab v v^T (nz (nz + 1) / 2 entries).
    int e = 0;
    for (int i = 0; i < nz; ++i)
      for (int j = i; j < nz; ++j) vv[e++] = v[i] * v[j];
    const int tri = e;
    for (int a = 0; a < n; ++a) {
      const double ma = m * p[a];
      for (int b = a; b < n; ++b) {
        const double h = ma * p[b] - (a == b ? ma : 0.0);
        double* __restrict out = H + (a * n + b) * tri;
        for (int q = 0; q < tri; ++q) out[q] += h * vv[q];
      }
    }
  }
  return total;
}

// Objective, and optionally gradient / Hessian, for the packed parameters.
double evaluate(const CatGlmData& data, const Layout& L, const LogTPM& tpm,
                const Eigen::MatrixXd& w, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
  const int n = L.n;
  const int d = L.d;
  const int B = L.block();
  const int nz = 1 + d;
  const int m_dim = n * nz;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tpm_r = tpm;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w_r = w;
  Workspace ws;
  ws.u.resize(n);
  ws.p.resize(n);
  ws.v.resize(nz);
  ws.vv.resize(nz * nz);
  if (grad) ws.g_blocks.assign(static_cast<std::size_t>(n) * m_dim, 0.0);
  const int tri = nz * (nz + 1) / 2;
  const std::size_t h_stride = static_cast<std::size_t>(n) * n * tri;
  if (hess) ws.h_blocks.assign(static_cast<std::size_t>(n) * h_stride, 0.0);
  auto g_of = [&](int k) { return grad ? ws.g_blocks.data() + static_cast<std::size_t>(k) * m_dim : nullptr; };
  auto h_of = [&](int k) {
    return hess ? ws.h_blocks.data() + static_cast<std::size_t>(k) * h_stride : nullptr;
  };

  double total = 0.0;
  const double* empty_features = nullptr;
  for (int i = 0; i < data.size(); ++i) {
    const int k = data.prev[i];
    total += accumulate_point(n, d, k, tpm_r.data(), w_r.data(),
                              d > 0 ? data.features.row(i).data() : empty_features,
                              data.counts.row(i).data(), ws.u.data(), ws.p.data(), ws.v.data(),
                              ws.vv.data(), g_of(k), h_of(k));
  }
  if (data.prior_counts.size() > 0) {
    Eigen::VectorXd c(n);
    for (int k = 0; k < n; ++k) {
      c = data.prior_counts.row(k).transpose();
      if (c.isZero(0.0)) continue;
      total += accumulate_point(n, d, k, tpm_r.data(), w_r.data(), nullptr, c.data(), ws.u.data(),
                                ws.p.data(), ws.v.data(), ws.vv.data(), g_of(k), h_of(k));
    }
  }

  auto packed = [&](int k, int a, int i) { return a * B + (i == 0 ? k : n + i - 1); };
  if (grad) {
    grad->setZero(L.size());
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < nz; ++i) (*grad)(packed(k, a, i)) += g_of(k)[a * nz + i];
  }
  if (hess) {
    hess->setZero(L.size(), L.size());
    std::vector<int> tri_index(nz * nz);
    for (int i = 0, e = 0; i < nz; ++i)
      for (int j = i; j < nz; ++j, ++e) tri_index[i * nz + j] = tri_index[j * nz + i] = e;
    for (int k = 0; k < n; ++k) {
      const double* H = h_of(k);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double* blk = H + (std::min(a, b) * n + std::max(a, b)) * tri;
          for (int i = 0; i < nz; ++i)
            for (int j = 0; j < nz; ++j)
              (*hess)(packed(k, a, i), packed(k, b, j)) += blk[tri_index[i * nz + j]];
        }
    }
  }
  return total;
}

}  // namespace

double catglm_objective(const CatGlmData& data, const LogTPM& log_tpm,
                        const Eigen::MatrixXd& weights) {
  const Layout L{data.n_states, data.feature_dim};
  return evaluate(data, L, log_tpm, weights, nullptr, nullptr);
}

CatGlmResult fit_catglm(const CatGlmData& data, const LogTPM& log_tpm,
                        const Eigen::MatrixXd& weights, const CatGlmOptions& options) {
  const Layout L{data.n_states, data.feature_dim};
  if (log_tpm.rows() != L.n || log_tpm.cols() != L.n || weights.rows() != L.n ||
      weights.cols() != L.d)
    throw Error("FeatureDimMismatch", "Cat-GLM parameter shapes");

  CatGlmResult res;
  res.log_tpm = log_tpm;
  res.weights = weights;
  normalize_rows(res.log_tpm);
  res.objective = evaluate(data, L, res.log_tpm, res.weights, nullptr, nullptr);
  res.initial_objective = res.objective;

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  LogTPM trial_tpm;
  Eigen::MatrixXd trial_w;
  for (int it = 0; it < options.max_iterations; ++it) {
    evaluate(data, L, res.log_tpm, res.weights, &grad, &hess);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
    const Eigen::VectorXd theta = pack(L, res.log_tpm, res.weights);
    Eigen::MatrixXd neg = -hess;
    const double scale = 1.0 + neg.diagonal().cwiseAbs().maxCoeff();
    double lambda = 1e-8 * scale;
    bool accepted = false;
    for (int damp = 0; damp < 6 && !accepted; ++damp, lambda *= 100.0) {
      Eigen::MatrixXd sys = neg;
      sys.diagonal().array() += lambda;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
      if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) continue;
      const Eigen::VectorXd step = ldlt.solve(grad);
      const double slope = grad.dot(step);
      if (!(slope > 0.0) || !step.allFinite()) continue;
      double s = options.initial_step;
      for (int ls = 0; ls < options.max_line_search; ++ls, s *= options.backtrack_factor) {
        unpack(L, theta + s * step, trial_tpm, trial_w);
        normalize_rows(trial_tpm);
        const double f = evaluate(data, L, trial_tpm, trial_w, nullptr, nullptr);
        if (std::isfinite(f) && f >= res.objective + 1e-4 * s * slope) {
          res.log_tpm = trial_tpm;
          res.weights = trial_w;
          const double gain = f - res.objective;
          res.objective = f;
          accepted = true;
          if (gain <= std::max(options.absolute_tolerance, 1e-13 * (1.0 + std::abs(f))))
            it = options.max_iterations;
          break;
        }
      }
    }
    ++res.iterations;
    if (!accepted) {
      // no ascent direction survived the line search
      res.line_search_failed = res.objective == res.initial_objective;
      break;
    }
  }
  return res;
}

}  // namespace hsrdm
