// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hsrdm/chain.hpp"
#include "hsrdm/dataset.hpp"
#include "hsrdm/error.hpp"
#include "hsrdm/model.hpp"

namespace hsrdm {

// q(s) q(z^1) ... q(z^J). Pairwise slabs at transitions into an example
// start are products of marginals and carry no information.
struct VariationalPosterior {
  ChainPosterior q_s;
  std::vector<ChainPosterior> q_z;
};

struct CaviConfig {
  int n_iterations = 10;
  int m_step_substeps = 50;
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  int max_line_search = 30;
  double tolerance = 0.0;  // relative ELBO change that stops early; 0 = never
  std::uint64_t seed = 120;
  int bottom_iters = 5;   // stage-1 EM iterations of smart initialization
  int top_iters = 20;     // stage-2 iterations
  bool init_on_velocities = false;
  bool learn_recurrence = false;  // no shipped kind is learnable; must stay false
  int threads = 1;

  void validate() const;
};

// Structural choices that a fit does not learn.
struct ModelSpec {
  int L = 1;
  int K = 1;
  EmissionFamily family = EmissionFamily::gaussian_var;
  RecurrenceSpec system_recurrence;
  RecurrenceSpec entity_recurrence;
  PriorConfig prior;
};

struct ElboTraceEntry {
  int iteration = 0;
  std::string phase;  // init, ves, vez, m
  double value = 0.0; // ELBO + log prior
};

struct CaviResult {
  ModelParams params;
  VariationalPosterior posterior;
  std::vector<ElboTraceEntry> trace;
};

// Raised when a step fails mid-run; carries the last complete state.
class CaviAborted : public Error {
 public:
  CaviAborted(const Error& cause, std::shared_ptr<const CaviResult> last)
      : Error(cause.code(), cause.what()), last_(std::move(last)) {}
  const CaviResult* last_valid() const { return last_.get(); }

 private:
  std::shared_ptr<const CaviResult> last_;
};

// Surrogate chains of the two E steps.
ChainSpec build_ves_spec(const ModelParams& params, const TimeSeriesDataset& data,
                         const std::vector<ChainPosterior>& q_z);
ChainSpec build_vez_spec(const ModelParams& params, const TimeSeriesDataset& data,
                         const ChainPosterior& q_s, int entity);

ChainPosterior ves_step(const ModelParams& params, const TimeSeriesDataset& data,
                        const std::vector<ChainPosterior>& q_z);
ChainPosterior vez_step(const ModelParams& params, const TimeSeriesDataset& data,
                        const ChainPosterior& q_s, int entity);

ModelParams m_step(const ModelParams& params, const TimeSeriesDataset& data,
                   const ChainPosterior& q_s, const std::vector<ChainPosterior>& q_z,
                   const CaviConfig& config);

double compute_elbo(const ModelParams& params, const TimeSeriesDataset& data,
                    const VariationalPosterior& q);
// Log density of the point-estimate priors (sticky Dirichlet on system TPM
// rows, symmetric Dirichlet on initial state distributions, inverse Wishart
// on Gaussian initial covariances).
double log_prior(const ModelParams& params);

struct RarhmmFit {
  ModelParams params;  // L = 1, J = 1
  ChainPosterior q_z;
  std::vector<double> trace;  // ELBO + log prior after each M step
};

// Single-entity recurrent AR-HMM: k-means pre-initialization followed by
// n_iterations of {VEZ, M}. `data` must hold exactly one entity.
RarhmmFit fit_rarhmm(const TimeSeriesDataset& data, int K, EmissionFamily family,
                     const RecurrenceSpec& entity_recurrence, const PriorConfig& prior,
                     const CaviConfig& config, std::uint64_t seed, int n_iterations);

// Seed used for entity j's stage-1 fit.
std::uint64_t entity_init_seed(std::uint64_t seed, int j);

struct SmartInitResult {
  ModelParams params;
  VariationalPosterior posterior;
};

SmartInitResult smart_initialize(const TimeSeriesDataset& data, const ModelSpec& spec,
                                 const CaviConfig& config);

CaviResult run_cavi(const TimeSeriesDataset& data, const ModelSpec& spec,
                    const CaviConfig& config);

// CAVI iterations from given parameters; without a starting posterior the
// entity chains are first fit under a uniform q(s).
CaviResult continue_cavi(const ModelParams& params, const TimeSeriesDataset& data,
                         const CaviConfig& config, int n_iterations,
                         const VariationalPosterior* start = nullptr);

// Posterior under fixed parameters: starts from a uniform q(s) and runs
// `rounds` alternations of the two E steps.
VariationalPosterior infer_posterior(const ModelParams& params, const TimeSeriesDataset& data,
                                     int rounds = 5, int threads = 1);

}  // namespace hsrdm
