// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/emissions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || !cov.allFinite())
    throw Error("DegenerateCovariance");
  const auto diag = llt.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any()) throw Error("DegenerateCovariance");
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double gaussian_log_density(const Eigen::LLT<Eigen::MatrixXd>& llt, double logdet,
                            const Eigen::VectorXd& resid) {
  const Eigen::VectorXd z = llt.matrixL().solve(resid);
  return -0.5 * (resid.size() * kLog2Pi + logdet + z.squaredNorm());
}

double von_mises_log_density(double mu, double kappa, double x) {
  return kappa * std::cos(x - mu) - kLog2Pi - log_bessel_i0(kappa);
}

double sample_von_mises(double mu, double kappa, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (kappa < 1e-8) return wrap_angle(mu + (2.0 * unif(rng) - 1.0) * std::numbers::pi);
  if (kappa > 1e5) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(kappa));
    return wrap_angle(mu + normal(rng));
  }
  // Best & Fisher (1979) rejection sampler
  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);
  for (;;) {
    const double u1 = unif(rng);
    const double u2 = unif(rng);
    const double u3 = unif(rng);
    const double z = std::cos(std::numbers::pi * u1);
    const double f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
      const double theta = (u3 > 0.5 ? 1.0 : -1.0) * std::acos(std::clamp(f, -1.0, 1.0));
      return wrap_angle(mu + theta);
    }
  }
}

double clamp_concentration(double k) { return std::clamp(k, 1e-8, kMaxConcentration); }

// Weighted resultant of x_curr - a * x_prev.
struct Resultant {
  double c = 0.0;
  double s = 0.0;
  double length() const { return std::hypot(c, s); }
};

Resultant resultant(double a, const Eigen::Ref<const Eigen::VectorXd>& xp,
                    const Eigen::Ref<const Eigen::VectorXd>& xc,
                    const Eigen::Ref<const Eigen::VectorXd>& w) {
  Resultant r;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) == 0.0) continue;
    const double d = xc(i) - a * xp(i);
    r.c += w(i) * std::cos(d);
    r.s += w(i) * std::sin(d);
  }
  return r;
}

}  // namespace

EmissionFamily family_of(const EmissionParams& p) {
  return std::holds_alternative<GaussianVarParams>(p) ? EmissionFamily::gaussian_var
                                                      : EmissionFamily::von_mises_ar;
}

int obs_dim_of(const EmissionParams& p) {
  if (const auto* g = std::get_if<GaussianVarParams>(&p)) return static_cast<int>(g->b.size());
  return 1;
}

void validate(const EmissionParams& p) {
  std::visit(Overloaded{
                 [](const GaussianVarParams& g) {
                   const auto D = g.b.size();
                   if (g.A.rows() != D || g.A.cols() != D || g.Q.rows() != D || g.Q.cols() != D)
                     throw Error("FeatureDimMismatch", "VAR block shapes");
                   if (!(g.Q - g.Q.transpose()).isZero(1e-9 * (1.0 + g.Q.norm())))
                     throw Error("DegenerateCovariance", "Q not symmetric");
                   factor(g.Q);
                 },
                 [](const VonMisesArParams& v) {
                   if (!(v.concentration > 0.0)) throw Error("InvalidConcentration");
                 }},
             p);
}

void validate(const InitialEmissionParams& p) {
  std::visit(Overloaded{[](const GaussianInitParams& g) { factor(g.covariance); },
                        [](const VonMisesInitParams& v) {
                          if (!(v.concentration > 0.0)) throw Error("InvalidConcentration");
                        }},
             p);
}

double emission_log_density(const EmissionParams& p,
                            const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                            const Eigen::Ref<const Eigen::VectorXd>& x_curr) {
  return std::visit(
      Overloaded{[&](const GaussianVarParams& g) {
                   if (x_prev.size() != g.b.size() || x_curr.size() != g.b.size())
                     throw Error("FeatureDimMismatch", "observation dimension");
                   const auto llt = factor(g.Q);
                   const Eigen::VectorXd r = x_curr - g.A * x_prev - g.b;
                   return gaussian_log_density(llt, log_det(llt), r);
                 },
                 [&](const VonMisesArParams& v) {
                   return von_mises_log_density(v.a * x_prev(0) + v.drift, v.concentration,
                                                x_curr(0));
                 }},
      p);
}

void emission_log_densities(const EmissionParams& p, const Eigen::MatrixXd& x,
                            Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index T = x.rows();
  out.setZero();
  if (T < 2) return;
  std::visit(Overloaded{[&](const GaussianVarParams& g) {
                          const auto llt = factor(g.Q);
                          const double base = -0.5 * (g.b.size() * kLog2Pi + log_det(llt));
                          Eigen::MatrixXd resid =
                              (x.bottomRows(T - 1) - x.topRows(T - 1) * g.A.transpose())
                                  .transpose();
                          resid.colwise() -= g.b;
                          llt.matrixL().solveInPlace(resid);
                          out.tail(T - 1) =
                              (base - 0.5 * resid.colwise().squaredNorm().array()).matrix().transpose();
                        },
                        [&](const VonMisesArParams& v) {
                          const double c = -kLog2Pi - log_bessel_i0(v.concentration);
                          for (Eigen::Index t = 1; t < T; ++t)
                            out(t) = v.concentration *
                                         std::cos(x(t, 0) - v.a * x(t - 1, 0) - v.drift) +
                                     c;
                        }},
             p);
}

double initial_log_density(const InitialEmissionParams& p,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::visit(
      Overloaded{[&](const GaussianInitParams& g) {
                   const auto llt = factor(g.covariance);
                   return gaussian_log_density(llt, log_det(llt), x - g.mean);
                 },
                 [&](const VonMisesInitParams& v) {
                   return von_mises_log_density(v.mean, v.concentration, x(0));
                 }},
      p);
}

Eigen::VectorXd emission_conditional_mean(const EmissionParams& p,
                                          const Eigen::Ref<const Eigen::VectorXd>& x_prev) {
  return std::visit(Overloaded{[&](const GaussianVarParams& g) -> Eigen::VectorXd {
                                 return g.A * x_prev + g.b;
                               },
                               [&](const VonMisesArParams& v) -> Eigen::VectorXd {
                                 Eigen::VectorXd m(1);
                                 m(0) = wrap_angle(v.a * x_prev(0) + v.drift);
                                 return m;
                               }},
                    p);
}

Eigen::VectorXd emission_sample(const EmissionParams& p,
                                const Eigen::Ref<const Eigen::VectorXd>& x_prev, Rng& rng) {
  return std::visit(
      Overloaded{[&](const GaussianVarParams& g) -> Eigen::VectorXd {
                   const auto llt = factor(g.Q);
                   std::normal_distribution<double> normal(0.0, 1.0);
                   Eigen::VectorXd e(g.b.size());
                   for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = normal(rng);
                   return g.A * x_prev + g.b + llt.matrixL() * e;
                 },
                 [&](const VonMisesArParams& v) -> Eigen::VectorXd {
                   Eigen::VectorXd s(1);
                   s(0) = sample_von_mises(v.a * x_prev(0) + v.drift, v.concentration, rng);
                   return s;
                 }},
      p);
}

Eigen::VectorXd initial_sample(const InitialEmissionParams& p, Rng& rng) {
  return std::visit(
      Overloaded{[&](const GaussianInitParams& g) -> Eigen::VectorXd {
                   const auto llt = factor(g.covariance);
                   std::normal_distribution<double> normal(0.0, 1.0);
                   Eigen::VectorXd e(g.mean.size());
                   for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = normal(rng);
                   return g.mean + llt.matrixL() * e;
                 },
                 [&](const VonMisesInitParams& v) -> Eigen::VectorXd {
                   Eigen::VectorXd s(1);
                   s(0) = sample_von_mises(v.mean, v.concentration, rng);
                   return s;
                 }},
      p);
}

GaussianVarParams fit_gaussian_var_weighted(const Eigen::Ref<const Eigen::MatrixXd>& x_prev,
                                            const Eigen::Ref<const Eigen::MatrixXd>& x_curr,
                                            const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const Eigen::Index n = x_prev.rows();
  const Eigen::Index D = x_prev.cols();
  if (x_curr.rows() != n || x_curr.cols() != D || weights.size() != n)
    throw Error("FeatureDimMismatch", "regression inputs disagree in shape");
  if ((weights.array() < 0.0).any()) throw Error("EmptyWeightSet", "negative weight");
  const double wsum = weights.sum();
  if (!(wsum > 0.0)) throw Error("EmptyWeightSet");

  // Gram matrix of the augmented design [x_prev, 1]
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(D + 1, D + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D + 1, D);
  Eigen::VectorXd z(D + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights(i);
    if (w == 0.0) continue;
    z.head(D) = x_prev.row(i).transpose();
    z(D) = 1.0;
    G.selfadjointView<Eigen::Lower>().rankUpdate(z, w);
    H.noalias() += w * z * x_curr.row(i);
  }
  G = G.selfadjointView<Eigen::Lower>();
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13))
    throw Error("UnidentifiableRegression");
  const Eigen::MatrixXd beta = llt.solve(H);  // (D+1) x D

  GaussianVarParams out;
  out.A = beta.topRows(D).transpose();
  out.b = beta.row(D).transpose();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(D, D);
  Eigen::VectorXd r(D);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights(i);
    if (w == 0.0) continue;
    r = x_curr.row(i).transpose() - out.A * x_prev.row(i).transpose() - out.b;
    S.selfadjointView<Eigen::Lower>().rankUpdate(r, w);
  }
  S = S.selfadjointView<Eigen::Lower>();
  S /= wsum;
  const double jitter = std::max(1e-8 * S.trace() / static_cast<double>(D), 1e-10);
  S.diagonal().array() += jitter;
  out.Q = S;
  return out;
}

double gaussian_var_weighted_loglik(const GaussianVarParams& p,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x_prev,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x_curr,
                                    const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const auto llt = factor(p.Q);
  const double base = -0.5 * (p.b.size() * kLog2Pi + log_det(llt));
  double total = 0.0;
  Eigen::VectorXd r(p.b.size());
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) == 0.0) continue;
    r = x_curr.row(i).transpose() - p.A * x_prev.row(i).transpose() - p.b;
    llt.matrixL().solveInPlace(r);
    total += weights(i) * (base - 0.5 * r.squaredNorm());
  }
  return total;
}

VonMisesArParams fit_von_mises_ar_weighted(const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                                           const Eigen::Ref<const Eigen::VectorXd>& x_curr,
                                           const Eigen::Ref<const Eigen::VectorXd>& weights) {
  if (x_prev.size() != x_curr.size() || weights.size() != x_prev.size())
    throw Error("FeatureDimMismatch", "von Mises inputs disagree in length");
  const double wsum = weights.sum();
  if (!(wsum > 0.0)) throw Error("EmptyWeightSet");

  // Maximizing sum w cos(x - a x_prev - drift) over drift gives the resultant
  // length of x - a x_prev, so search a on a grid then refine.
  constexpr double kLo = -2.0, kHi = 2.0, kStep = 0.01;
  const int n_grid = static_cast<int>(std::lround((kHi - kLo) / kStep)) + 1;
  double best_a = 1.0;
  double best_len = -1.0;
  for (int g = 0; g < n_grid; ++g) {
    const double a = kLo + g * kStep;
    const double len = resultant(a, x_prev, x_curr, weights).length();
    if (len > best_len) {
      best_len = len;
      best_a = a;
    }
  }
  double lo = std::max(kLo, best_a - kStep);
  double hi = std::min(kHi, best_a + kStep);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - phi * (hi - lo);
  double d = lo + phi * (hi - lo);
  double fc = resultant(c, x_prev, x_curr, weights).length();
  double fd = resultant(d, x_prev, x_curr, weights).length();
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = resultant(c, x_prev, x_curr, weights).length();
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = resultant(d, x_prev, x_curr, weights).length();
    }
  }
  double a = 0.5 * (lo + hi);
  Resultant r = resultant(a, x_prev, x_curr, weights);
  if (r.length() < best_len) {
    a = best_a;
    r = resultant(a, x_prev, x_curr, weights);
  }
  VonMisesArParams out;
  out.a = a;
  out.drift = std::atan2(r.s, r.c);
  out.concentration = inverse_bessel_ratio_a1(std::min(1.0, r.length() / wsum));
  return out;
}

double von_mises_weighted_loglik(const VonMisesArParams& p,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_curr,
                                 const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const double c = -kLog2Pi - log_bessel_i0(p.concentration);
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) == 0.0) continue;
    total += weights(i) *
             (p.concentration * std::cos(x_curr(i) - p.a * x_prev(i) - p.drift) + c);
  }
  return total;
}

double InitCovariancePrior::log_density(const Eigen::MatrixXd& covariance) {
  const int D = static_cast<int>(covariance.rows());
  const double nu = dof(D);
  const double scale = nu + D + 1.0;
  const auto llt = factor(covariance);
  const double logdet_sigma = log_det(llt);
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(D, D));
  double log_multigamma = 0.25 * D * (D - 1) * std::log(std::numbers::pi);
  for (int i = 0; i < D; ++i) log_multigamma += std::lgamma(0.5 * (nu - i));
  return 0.5 * nu * D * std::log(scale) - 0.5 * nu * D * std::numbers::ln2 - log_multigamma -
         0.5 * (nu + D + 1.0) * logdet_sigma - 0.5 * scale * inv.trace();
}

GaussianInitParams fit_gaussian_init_map(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                         const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const Eigen::Index D = x.cols();
  const double wsum = weights.sum();
  if (!(wsum > 0.0)) throw Error("EmptyWeightSet");
  GaussianInitParams out;
  out.mean = (x.transpose() * weights) / wsum;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(D, D);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (weights(i) == 0.0) continue;
    const Eigen::VectorXd r = x.row(i).transpose() - out.mean;
    S.noalias() += weights(i) * r * r.transpose();
  }
  const double nu = InitCovariancePrior::dof(static_cast<int>(D));
  const double scale = nu + D + 1.0;
  out.covariance = (scale * Eigen::MatrixXd::Identity(D, D) + S) / (scale + wsum);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

VonMisesInitParams fit_von_mises_init(const Eigen::Ref<const Eigen::VectorXd>& x,
                                      const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const double wsum = weights.sum();
  if (!(wsum > 0.0)) throw Error("EmptyWeightSet");
  double c = 0.0, s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    c += weights(i) * std::cos(x(i));
    s += weights(i) * std::sin(x(i));
  }
  VonMisesInitParams out;
  out.mean = std::atan2(s, c);
  out.concentration = inverse_bessel_ratio_a1(std::hypot(c, s) / (wsum + 1.0));
  return out;
}

double initial_weighted_loglik(const InitialEmissionParams& p,
                               const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& weights) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (weights(i) != 0.0) total += weights(i) * initial_log_density(p, x.row(i).transpose());
  return total;
}

double log_bessel_i0(double kappa) {
  if (kappa < 0.0) kappa = -kappa;
  if (kappa < 500.0) return std::log(std::cyl_bessel_i(0.0, kappa));
  // large-argument expansion of exp(-k) I0(k) sqrt(2 pi k)
  const double inv = 1.0 / kappa;
  const double series = 1.0 + inv / 8.0 + 9.0 * inv * inv / 128.0 + 225.0 * inv * inv * inv / 3072.0;
  return kappa - 0.5 * std::log(2.0 * std::numbers::pi * kappa) + std::log(series);
}

double bessel_ratio_a1(double kappa) {
  if (kappa <= 0.0) return 0.0;
  if (kappa < 1e-6) return 0.5 * kappa;
  if (kappa < 500.0) return std::cyl_bessel_i(1.0, kappa) / std::cyl_bessel_i(0.0, kappa);
  const double inv = 1.0 / kappa;
  return 1.0 - 0.5 * inv - 0.125 * inv * inv - 0.125 * inv * inv * inv;
}

double inverse_bessel_ratio_a1(double r) {
  if (!(r > 0.0)) return 1e-8;
  if (r >= 1.0) return kMaxConcentration;
  double k;
  if (r < 0.53) {
    k = 2.0 * r + r * r * r + 5.0 * std::pow(r, 5) / 6.0;
  } else if (r < 0.85) {
    k = -0.4 + 1.39 * r + 0.43 / (1.0 - r);
  } else {
    k = 1.0 / (r * r * r - 4.0 * r * r + 3.0 * r);
  }
  k = clamp_concentration(k);
  // Newton polish on A1(k) - r, A1'(k) = 1 - A1/k - A1^2
  for (int it = 0; it < 30; ++it) {
    const double a1 = bessel_ratio_a1(k);
    const double deriv = 1.0 - a1 / k - a1 * a1;
    if (!(deriv > 0.0)) break;
    double next = k - (a1 - r) / deriv;
    if (!(next > 0.0)) next = 0.5 * k;
    next = clamp_concentration(next);
    if (std::abs(next - k) <= 1e-12 * k) {
      k = next;
      break;
    }
    k = next;
  }
  return k;
}

}  // namespace hsrdm
