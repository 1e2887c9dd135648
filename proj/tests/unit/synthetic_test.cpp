// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "hsrdm/error.hpp"
#include "hsrdm/synthetic.hpp"

namespace hsrdm {
namespace {

TEST(FigureEight, EachStateClosesItsCircleAfterOnePeriod) {
  const FigureEightConfig c;
  const ModelParams p = figure_eight_params(c);
  for (int j = 0; j < c.J; ++j)
    for (int k = 0; k < 2; ++k) {
      const auto& e = std::get<GaussianVarParams>(p.emissions[j][k]);
      const Eigen::Vector2d center(0.0, k == 0 ? 1.0 : -1.0);
      Eigen::Vector2d x = center + Eigen::Vector2d(std::cos(0.3), std::sin(0.3));
      const Eigen::Vector2d x0 = x;
      for (int s = 0; s < c.periods[j]; ++s) {
        x = e.A * x + e.b;
        EXPECT_NEAR((x - center).norm(), 1.0, 1e-12);
      }
      EXPECT_LT((x - x0).norm(), 1e-12);
    }
}

TEST(FigureEight, DeterministicPerSeed) {
  FigureEightConfig c;
  const LabeledDataset a = generate_figure_eight(c);
  const LabeledDataset b = generate_figure_eight(c);
  c.seed = 121;
  const LabeledDataset d = generate_figure_eight(c);
  EXPECT_TRUE(a.data.observations[2].isApprox(b.data.observations[2], 0.0));
  EXPECT_EQ(a.latents.entity_states, b.latents.entity_states);
  EXPECT_FALSE(a.data.observations[2].isApprox(d.data.observations[2]));
}

TEST(FigureEight, ResidualVarianceMatchesNoise) {
  FigureEightConfig c;
  c.T = 2000;
  const LabeledDataset g = generate_figure_eight(c);
  const ModelParams p = figure_eight_params(c);
  double ss = 0.0;
  int n = 0;
  for (int j = 0; j < c.J; ++j)
    for (int t = 1; t < c.T; ++t) {
      const auto& e = std::get<GaussianVarParams>(p.emissions[j][g.latents.entity_states(t, j)]);
      const Eigen::Vector2d r = g.data.observations[j].row(t).transpose() -
                                (e.A * g.data.observations[j].row(t - 1).transpose() + e.b);
      ss += r.squaredNorm();
      n += 2;
    }
  EXPECT_NEAR(ss / n, c.noise_variance, 0.2 * c.noise_variance);
}

TEST(FigureEight, SystemStateAlternatesOnClock) {
  const FigureEightConfig c;
  const LabeledDataset g = generate_figure_eight(c);
  for (int t = 0; t < c.T; ++t) EXPECT_EQ(g.latents.system_states[t], (t / 100) % 2);
}

TEST(FigureEight, SwitchesHappenNearTheOrigin) {
  const FigureEightConfig c;
  const LabeledDataset g = generate_figure_eight(c);
  const double radius = 3.0 * c.rbf_bandwidth;
  int switches = 0, near = 0;
  for (int j = 0; j < c.J; ++j)
    for (int t = 1; t < c.T; ++t)
      if (g.latents.entity_states(t, j) != g.latents.entity_states(t - 1, j)) {
        ++switches;
        near += g.data.observations[j].row(t - 1).norm() < radius;
      }
  ASSERT_GT(switches, 0);
  EXPECT_GE(static_cast<double>(near) / switches, 0.99) << near << " of " << switches;
}

// Hand-evaluated switch probability for an entity at the origin on the top
// circle while the system prefers the bottom one.
TEST(FigureEight, OriginSwitchProbability) {
  const FigureEightConfig c;
  const ModelParams p = figure_eight_params(c);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(1, c.rbf_scale);
  const Eigen::VectorXd lp = entity_transition_log_probs(p.entity, 0, 1, 0, f);
  const double stay = std::log(0.999) + c.a_low * c.rbf_scale;
  const double move = std::log(0.001) + c.a_high * c.rbf_scale;
  EXPECT_NEAR(std::exp(lp(1)), std::exp(move) / (std::exp(stay) + std::exp(move)), 1e-12);
  const Eigen::VectorXd far = entity_transition_log_probs(p.entity, 0, 1, 0, Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(std::exp(far(1)), 0.001, 1e-12);
}

TEST(FigureEight, ConfigValidation) {
  FigureEightConfig c;
  c.periods = {5, 20};
  EXPECT_THROW(generate_figure_eight(c), Error);
  c = FigureEightConfig{};
  c.stickiness = 1.0;
  EXPECT_THROW(generate_figure_eight(c), Error);
}

MarchingBandConfig small_band() {
  MarchingBandConfig c;
  c.J = 16;
  c.oob_threshold = 3;
  c.escape_probability = 2e-3;
  c.n_sequences = 3;
  return c;
}

TEST(MarchingBand, DeterministicPerSeed) {
  const auto a = generate_marching_band(small_band());
  const auto b = generate_marching_band(small_band());
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].latents.system_states, b[i].latents.system_states);
    EXPECT_TRUE(a[i].data.observations[5].isApprox(b[i].data.observations[5], 0.0));
  }
}

TEST(MarchingBand, NoEscapesMeansNoResets) {
  MarchingBandConfig c = small_band();
  c.escape_probability = 0.0;
  for (const auto& s : generate_marching_band(c)) {
    EXPECT_EQ(s.data.num_timesteps(), 1000);
    for (int l : s.latents.system_states) EXPECT_LT(l, 5);
    EXPECT_EQ(s.latents.entity_states.maxCoeff(), 0);
  }
}

TEST(MarchingBand, ZeroThresholdResetsForever) {
  MarchingBandConfig c = small_band();
  c.oob_threshold = 0;
  c.max_length = 300;
  c.n_sequences = 1;
  const auto s = generate_marching_band(c)[0];
  EXPECT_EQ(s.data.num_timesteps(), 300);
  for (std::size_t t = 1; t < s.latents.system_states.size(); ++t)
    EXPECT_EQ(s.latents.system_states[t], 5);
}

TEST(MarchingBand, ResetLabelsAgreeAcrossLevels) {
  MarchingBandConfig c = small_band();
  int resets = 0;
  for (const auto& s : generate_marching_band(c)) {
    const auto& sys = s.latents.system_states;
    const int T = static_cast<int>(sys.size());
    for (int t = 0; t < T; ++t) {
      const bool reset = sys[t] == 5;
      for (int j = 0; j < c.J; ++j) EXPECT_EQ(s.latents.entity_states(t, j) == 2, reset);
      if (reset && (t == 0 || sys[t - 1] != 5)) {
        ++resets;
        // A reset starts once enough members are off the field, and lasts its full duration.
        int out = 0;
        for (int j = 0; j < c.J; ++j) {
          const Eigen::Vector2d p = s.data.observations[j].row(t - 1).transpose();
          out += p.x() < 0 || p.x() > 1 || p.y() < 0 || p.y() > 1;
        }
        EXPECT_GE(out, c.oob_threshold);
        for (int u = t; u < std::min(T, t + c.reset_duration); ++u) EXPECT_EQ(sys[u], 5);
        // The interrupted letter resumes.
        if (t + c.reset_duration < T) EXPECT_EQ(sys[t + c.reset_duration], sys[t - 1]);
      }
    }
  }
  EXPECT_GT(resets, 0);
}

TEST(MarchingBand, FormationStaysInField) {
  for (const auto& s : generate_marching_band(small_band()))
    for (int t = 0; t < s.data.num_timesteps(); ++t)
      for (int j = 0; j < 16; ++j)
        if (s.latents.entity_states(t, j) == 0 && (t == 0 || s.latents.system_states[t - 1] != 5)) {
          const Eigen::Vector2d p = s.data.observations[j].row(t).transpose();
          EXPECT_TRUE(p.x() >= 0 && p.x() <= 1 && p.y() >= 0 && p.y() <= 1) << t << " " << j;
        }
}

TEST(MarchingBand, ExtraDimensionsAreNoise) {
  MarchingBandConfig c = small_band();
  c.extra_dims = 3;
  c.escape_probability = 0.0;
  const auto s = generate_marching_band(c)[0];
  ASSERT_EQ(s.data.obs_dim(), 5);
  double ss = 0.0;
  int n = 0;
  for (const auto& x : s.data.observations) {
    ss += x.rightCols(3).squaredNorm();
    n += static_cast<int>(x.rows()) * 3;
  }
  EXPECT_NEAR(ss / n, c.extra_dim_variance, 0.2 * c.extra_dim_variance);
}

TEST(MarchingBand, LetterSweepRanges) {
  const LetterSweep h = letter_sweep('H', 0.5);
  EXPECT_NEAR(h.lo, 0.2, 1e-12);
  EXPECT_NEAR(h.hi, 0.8, 1e-12);
  const LetterSweep l = letter_sweep('L', 0.5);
  EXPECT_NEAR(l.lo, 0.25, 1e-12);
  EXPECT_NEAR(l.hi, 0.25, 1e-12);
  const LetterSweep a = letter_sweep('A', 0.9);
  EXPECT_NEAR(a.lo, 0.5, 1e-12);
  EXPECT_THROW(letter_sweep('Z', 0.5), Error);
}

TEST(MarchingBand, ConcatenateKeepsExampleBoundaries) {
  MarchingBandConfig c = small_band();
  c.escape_probability = 0.0;
  const auto parts = generate_marching_band(c);
  const LabeledDataset all = concatenate(parts);
  EXPECT_EQ(all.data.num_timesteps(), 3000);
  EXPECT_EQ(all.data.example_end_times, (std::vector<int>{1000, 2000, 3000}));
  EXPECT_TRUE(all.data.observations[3].middleRows(1000, 1000).isApprox(parts[1].data.observations[3], 0.0));
  EXPECT_THROW(concatenate({}), Error);
}

}  // namespace
}  // namespace hsrdm
