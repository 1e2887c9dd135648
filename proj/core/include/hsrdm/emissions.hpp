// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <variant>

#include "hsrdm/core_math.hpp"

namespace hsrdm {

enum class EmissionFamily { gaussian_var, von_mises_ar };

// x_t ~ N(A x_{t-1} + b, Q)
struct GaussianVarParams {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd Q;
};

// x_t ~ VonMises(a x_{t-1} + drift, concentration), scalar angles.
struct VonMisesArParams {
  double a = 1.0;
  double drift = 0.0;
  double concentration = 1.0;
};

struct GaussianInitParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct VonMisesInitParams {
  double mean = 0.0;
  double concentration = 1.0;
};

using EmissionParams = std::variant<GaussianVarParams, VonMisesArParams>;
using InitialEmissionParams = std::variant<GaussianInitParams, VonMisesInitParams>;

EmissionFamily family_of(const EmissionParams& p);
int obs_dim_of(const EmissionParams& p);

// Throws "DegenerateCovariance" / "InvalidConcentration".
void validate(const EmissionParams& p);
void validate(const InitialEmissionParams& p);

double emission_log_density(const EmissionParams& p,
                            const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                            const Eigen::Ref<const Eigen::VectorXd>& x_curr);

// out(t) = log p(x_t | x_{t-1}) for t = 1..T-1 of a T x D trajectory;
// out(0) is set to 0. Factorizes Q once.
void emission_log_densities(const EmissionParams& p, const Eigen::MatrixXd& x,
                            Eigen::Ref<Eigen::VectorXd> out);

double initial_log_density(const InitialEmissionParams& p,
                           const Eigen::Ref<const Eigen::VectorXd>& x);

Eigen::VectorXd emission_conditional_mean(const EmissionParams& p,
                                          const Eigen::Ref<const Eigen::VectorXd>& x_prev);

Eigen::VectorXd emission_sample(const EmissionParams& p,
                                const Eigen::Ref<const Eigen::VectorXd>& x_prev, Rng& rng);
Eigen::VectorXd initial_sample(const InitialEmissionParams& p, Rng& rng);

// Weighted least squares for (A, b), weighted residual covariance for Q
// (denominator sum(w)) plus a small diagonal jitter. Throws
// "EmptyWeightSet" or "UnidentifiableRegression".
GaussianVarParams fit_gaussian_var_weighted(const Eigen::Ref<const Eigen::MatrixXd>& x_prev,
                                            const Eigen::Ref<const Eigen::MatrixXd>& x_curr,
                                            const Eigen::Ref<const Eigen::VectorXd>& weights);

double gaussian_var_weighted_loglik(const GaussianVarParams& p,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x_prev,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x_curr,
                                    const Eigen::Ref<const Eigen::VectorXd>& weights);

// Grid + golden-section search over a, closed-form drift, inverse Bessel
// ratio for the concentration. Throws "EmptyWeightSet".
VonMisesArParams fit_von_mises_ar_weighted(const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                                           const Eigen::Ref<const Eigen::VectorXd>& x_curr,
                                           const Eigen::Ref<const Eigen::VectorXd>& weights);

double von_mises_weighted_loglik(const VonMisesArParams& p,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_curr,
                                 const Eigen::Ref<const Eigen::VectorXd>& weights);

// Inverse-Wishart prior on the initial covariance: scale (nu+D+1) I so the
// prior mode is the identity.
struct InitCovariancePrior {
  static double dof(int dim) { return dim + 2.0; }
  static double log_density(const Eigen::MatrixXd& covariance);
};

// MAP fit: weighted mean, covariance (Psi + S) / (nu + D + 1 + sum w).
GaussianInitParams fit_gaussian_init_map(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                         const Eigen::Ref<const Eigen::VectorXd>& weights);
// Circular mean and a concentration estimated from a resultant shrunk by
// one pseudo-observation.
VonMisesInitParams fit_von_mises_init(const Eigen::Ref<const Eigen::VectorXd>& x,
                                      const Eigen::Ref<const Eigen::VectorXd>& weights);
double initial_weighted_loglik(const InitialEmissionParams& p,
                               const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& weights);

double log_bessel_i0(double kappa);
// A1(kappa) = I1(kappa) / I0(kappa)
double bessel_ratio_a1(double kappa);
// Solves A1(kappa) = r for kappa, clamped to [1e-8, 1e6].
double inverse_bessel_ratio_a1(double r);

inline constexpr double kMaxConcentration = 1e6;

}  // namespace hsrdm
