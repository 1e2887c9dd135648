// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsrdm/dataset.hpp"
#include "hsrdm/model.hpp"

namespace hsrdm {

struct LabeledDataset {
  TimeSeriesDataset data;
  LatentTrajectories latents;
};

// Joins sequences as separate examples of one dataset.
LabeledDataset concatenate(const std::vector<LabeledDataset>& parts);

// Entities rotate around one of two unit circles that touch at the origin;
// near the origin a radial basis feature lets them switch circles, with the
// preferred circle set by a system state that alternates on a fixed clock.
struct FigureEightConfig {
  int J = 3;
  int T = 400;
  std::vector<int> periods = {5, 20, 40};  // one per entity, steps per revolution
  double stickiness = 0.999;
  double rbf_scale = 1.0;
  double rbf_bandwidth = 0.25;
  double a_high = 2.0;
  double a_low = -2.0;
  double noise_variance = 1e-4;
  int system_period = 100;
  bool recurrence = true;
  std::uint64_t seed = 120;

  void validate() const;
};

// Generating parameters as an HSRDM with L = K = 2 and rbf entity recurrence.
// State 0 is the top circle; the initial emission is not part of the
// generator and is set to a broad Gaussian.
ModelParams figure_eight_params(const FigureEightConfig& config);

LabeledDataset generate_figure_eight(const FigureEightConfig& config);

// Band members hold horizontal lanes in the unit square and sweep along
// letter stencils. Members occasionally leave the field; once enough are out
// the band resets at the center ("C") and repeats the interrupted letter.
//
// System labels: letter index in `letters`, then C = letters.size().
// Entity labels: 0 in formation, 1 stray, 2 resetting.
struct MarchingBandConfig {
  int J = 64;
  std::string letters = "LAUGH";
  int letter_duration = 200;
  int reset_duration = 50;
  int oob_threshold = 11;
  double escape_probability = 2e-4;
  double noise_sd = 0.02;
  int n_sequences = 10;
  int extra_dims = 0;
  double extra_dim_variance = 4e-4;
  int max_length = 5000;  // guards degenerate thresholds
  std::uint64_t seed = 3;

  void validate() const;
  int n_system_states() const { return static_cast<int>(letters.size()) + 1; }
};

std::vector<LabeledDataset> generate_marching_band(const MarchingBandConfig& config);

// Horizontal sweep range of the stencil at height y: {lo, hi, period}.
struct LetterSweep {
  double lo = 0.5;
  double hi = 0.5;
  double period = 50.0;
};
LetterSweep letter_sweep(char letter, double y);

}  // namespace hsrdm
