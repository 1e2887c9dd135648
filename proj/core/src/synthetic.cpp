// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "hsrdm/error.hpp"

namespace hsrdm {
namespace {

Eigen::Matrix2d rotation(double angle) {
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

const std::array<Eigen::Vector2d, 2> kCircleCenters = {Eigen::Vector2d(0.0, 1.0),
                                                       Eigen::Vector2d(0.0, -1.0)};

}  // namespace

LabeledDataset concatenate(const std::vector<LabeledDataset>& parts) {
  if (parts.empty()) throw Error("EmptyDataset", "nothing to concatenate");
  const int J = parts[0].data.num_entities();
  const int D = parts[0].data.obs_dim();
  int T = 0;
  bool any_mask = false;
  for (const auto& p : parts) {
    if (p.data.num_entities() != J || p.data.obs_dim() != D)
      throw Error("FeatureDimMismatch", "sequences differ in shape");
    T += p.data.num_timesteps();
    any_mask = any_mask || p.data.has_mask();
  }
  LabeledDataset out;
  out.data.observations.assign(J, Eigen::MatrixXd(T, D));
  out.latents.entity_states.resize(T, J);
  if (any_mask) out.data.observed = ObservedMask::Constant(T, J, true);
  int offset = 0;
  for (const auto& p : parts) {
    const int n = p.data.num_timesteps();
    for (int j = 0; j < J; ++j) out.data.observations[j].middleRows(offset, n) = p.data.observations[j];
    for (int e : p.data.example_end_times) out.data.example_end_times.push_back(offset + e);
    out.latents.system_states.insert(out.latents.system_states.end(),
                                     p.latents.system_states.begin(), p.latents.system_states.end());
    out.latents.entity_states.middleRows(offset, n) = p.latents.entity_states;
    if (p.data.has_mask()) out.data.observed.middleRows(offset, n) = p.data.observed;
    offset += n;
  }
  return out;
}

void FigureEightConfig::validate() const {
  if (J < 1 || T < 1 || static_cast<int>(periods.size()) != J)
    throw Error("InvalidConfig", "figure eight needs J >= 1, T >= 1 and one period per entity");
  if (!(stickiness > 0.0 && stickiness < 1.0)) throw Error("InvalidConfig", "stickiness in (0, 1)");
  for (int p : periods)
    if (p < 3) throw Error("InvalidConfig", "periods must be >= 3");
  if (!(rbf_bandwidth > 0.0) || !(rbf_scale > 0.0) || !(noise_variance >= 0.0) || system_period < 1)
    throw Error("InvalidConfig", "figure eight constants must be positive");
}

ModelParams figure_eight_params(const FigureEightConfig& config) {
  config.validate();
  RecurrenceSpec rec;
  if (config.recurrence) {
    rec.kind = RecurrenceKind::rbf;
    rec.bandwidth = config.rbf_bandwidth;
    rec.scale = config.rbf_scale;
  }
  ModelParams p = make_default_params(2, 2, config.J, 2, EmissionFamily::gaussian_var, {}, rec);
  const double stay = std::log(config.stickiness);
  const double leave = std::log(1.0 - config.stickiness);
  LogTPM sticky(2, 2);
  sticky << stay, leave, leave, stay;
  p.system.log_tpm = sticky;
  for (int j = 0; j < config.J; ++j) {
    const Eigen::Matrix2d A = rotation(2.0 * std::numbers::pi / config.periods[j]);
    for (int l = 0; l < 2; ++l) {
      auto& block = p.entity.at(j, l);
      block.log_tpm = sticky;
      if (config.recurrence) block.weights << (l == 0 ? config.a_high : config.a_low),
          (l == 1 ? config.a_high : config.a_low);
    }
    for (int k = 0; k < 2; ++k) {
      const Eigen::Vector2d b = (Eigen::Matrix2d::Identity() - A) * kCircleCenters[k];
      p.emissions[j][k] =
          GaussianVarParams{A, b, config.noise_variance * Eigen::MatrixXd::Identity(2, 2)};
    }
  }
  return p;
}

LabeledDataset generate_figure_eight(const FigureEightConfig& config) {
  const ModelParams params = figure_eight_params(config);
  const int T = config.T;
  const int J = config.J;
  Rng rng(config.seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(config.noise_variance);

  LabeledDataset out;
  out.data = make_dataset(std::vector<Eigen::MatrixXd>(J, Eigen::MatrixXd::Zero(T, 2)));
  out.latents.system_states.resize(T);
  out.latents.entity_states = Eigen::MatrixXi::Zero(T, J);
  for (int t = 0; t < T; ++t) out.latents.system_states[t] = (t / config.system_period) % 2;

  for (int j = 0; j < J; ++j) {
    const double a = angle(rng);
    out.data.observations[j].row(0) =
        (kCircleCenters[0] + Eigen::Vector2d(std::cos(a), std::sin(a))).transpose();
  }
  for (int t = 1; t < T; ++t) {
    const int l = out.latents.system_states[t];
    for (int j = 0; j < J; ++j) {
      const int z_prev = out.latents.entity_states(t - 1, j);
      const Eigen::VectorXd f = evaluate_recurrence(params.entity_recurrence, out.data, t, j);
      const int z = sample_log_categorical(entity_transition_log_probs(params.entity, j, l, z_prev, f), rng);
      out.latents.entity_states(t, j) = z;
      const auto& em = std::get<GaussianVarParams>(params.emissions[j][z]);
      const Eigen::Vector2d prev = out.data.observations[j].row(t - 1).transpose();
      Eigen::Vector2d next = em.A * prev + em.b;
      next(0) += sd * normal(rng);
      next(1) += sd * normal(rng);
      out.data.observations[j].row(t) = next.transpose();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Marching band

namespace {

struct Segment {
  double x0, y0, x1, y1;
};

std::vector<Segment> stencil(char letter) {
  switch (letter) {
    case 'L':
      return {{0.25, 0.9, 0.25, 0.1}, {0.25, 0.1, 0.75, 0.1}};
    case 'A':
      return {{0.1, 0.1, 0.5, 0.9}, {0.5, 0.9, 0.9, 0.1}, {0.3, 0.5, 0.7, 0.5}};
    case 'U':
      return {{0.2, 0.9, 0.2, 0.25},  {0.2, 0.25, 0.35, 0.1}, {0.35, 0.1, 0.65, 0.1},
              {0.65, 0.1, 0.8, 0.25}, {0.8, 0.25, 0.8, 0.9}};
    case 'G':
      return {{0.8, 0.8, 0.5, 0.9}, {0.5, 0.9, 0.2, 0.7}, {0.2, 0.7, 0.2, 0.3},
              {0.2, 0.3, 0.5, 0.1}, {0.5, 0.1, 0.8, 0.3}, {0.8, 0.3, 0.8, 0.5},
              {0.8, 0.5, 0.55, 0.5}};
    case 'H':
      return {{0.2, 0.1, 0.2, 0.9}, {0.8, 0.1, 0.8, 0.9}, {0.2, 0.5, 0.8, 0.5}};
    default:
      throw Error("InvalidConfig", std::string("no stencil for letter '") + letter + "'");
  }
}

constexpr double kHalfLane = 0.01;
constexpr double kSweepPeriod = 60.0;  // steps per back-and-forth sweep

}  // namespace

LetterSweep letter_sweep(char letter, double y) {
  const auto segs = stencil(letter);
  double lo = 2.0, hi = -1.0;
  for (const auto& s : segs) {
    if (std::abs(s.y1 - s.y0) < 1e-12) {
      if (std::abs(y - s.y0) <= kHalfLane) {
        lo = std::min({lo, s.x0, s.x1});
        hi = std::max({hi, s.x0, s.x1});
      }
      continue;
    }
    const double u = (y - s.y0) / (s.y1 - s.y0);
    if (u < 0.0 || u > 1.0) continue;
    const double x = s.x0 + u * (s.x1 - s.x0);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi < lo) {
    // Lane misses the stencil: hold at the nearest stencil point.
    double best = 1e9;
    for (const auto& s : segs) {
      const Eigen::Vector2d a(s.x0, s.y0), b(s.x1, s.y1);
      const Eigen::Vector2d d = b - a;
      const double u = std::clamp((Eigen::Vector2d(0.5, y) - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      const Eigen::Vector2d p = a + u * d;
      const double dist = std::abs(p.y() - y);
      if (dist < best) {
        best = dist;
        lo = hi = p.x();
      }
    }
  }
  return {lo, hi, kSweepPeriod};
}

void MarchingBandConfig::validate() const {
  if (J < 1 || letters.empty() || letter_duration < 1 || reset_duration < 1 || n_sequences < 1 ||
      max_length < 1)
    throw Error("InvalidConfig", "marching band sizes and durations must be positive");
  if (oob_threshold < 0 || oob_threshold > J) throw Error("InvalidConfig", "oob_threshold in [0, J]");
  if (!(escape_probability >= 0.0 && escape_probability <= 1.0))
    throw Error("InvalidConfig", "escape_probability in [0, 1]");
  if (!(noise_sd >= 0.0) || extra_dims < 0 || !(extra_dim_variance >= 0.0))
    throw Error("InvalidConfig", "noise settings must be nonnegative");
  for (char c : letters) stencil(c);
}

namespace {

constexpr double kFollowGain = 0.5;  // pull toward the stencil target per step
constexpr double kResetGain = 0.03;  // pull toward the center during a reset
constexpr double kStrayGain = 0.1;
constexpr double kStrayOffset = 0.15;  // strays settle this far outside the field
constexpr double kMinTempo = 0.6;      // per-entity multiplier on the letter's period
constexpr double kMaxTempo = 1.4;

bool out_of_field(const Eigen::Vector2d& p) {
  return p.x() < 0.0 || p.x() > 1.0 || p.y() < 0.0 || p.y() > 1.0;
}

double reflect(double v) {
  if (v < 0.0) return -v;
  if (v > 1.0) return 2.0 - v;
  return v;
}

LabeledDataset band_sequence(const MarchingBandConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int J = c.J;
  const int n_letters = static_cast<int>(c.letters.size());
  const int reset_label = n_letters;
  const double extra_sd = std::sqrt(c.extra_dim_variance);

  std::vector<Eigen::Vector2d> pos(J), stray_target(J);
  std::vector<char> stray(J, 0);
  // Per-entity phase and tempo keep the band from sweeping in lockstep.
  std::vector<double> lane(J), phase(J), tempo(J);
  for (int j = 0; j < J; ++j) {
    lane[j] = (j + 0.5) / J;
    phase[j] = 2.0 * std::numbers::pi * unif(rng);
    tempo[j] = kMinTempo + (kMaxTempo - kMinTempo) * unif(rng);
  }
  std::vector<std::vector<Eigen::Vector2d>> rows;
  std::vector<std::vector<double>> extra_rows;
  std::vector<int> sys;
  std::vector<std::vector<int>> ent;

  auto target = [&](int letter, int step, int j) {
    const LetterSweep sw = letter_sweep(c.letters[letter], lane[j]);
    const double s =
        0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * step / (sw.period * tempo[j]) + phase[j]);
    return Eigen::Vector2d(sw.lo + (sw.hi - sw.lo) * s, lane[j]);
  };
  for (int j = 0; j < J; ++j) pos[j] = target(0, 0, j);

  int letter = 0, step = 0, reset_left = 0;
  while (letter < n_letters && static_cast<int>(sys.size()) < c.max_length) {
    const int t = static_cast<int>(sys.size());
    if (reset_left == 0 && t > 0) {
      int count = 0;
      for (const auto& p : pos) count += out_of_field(p) ? 1 : 0;
      if (count >= c.oob_threshold) reset_left = c.reset_duration;
    }
    const bool resetting = reset_left > 0;
    std::vector<int> labels(J);
    std::vector<double> extra(static_cast<std::size_t>(J) * c.extra_dims);
    for (int j = 0; j < J; ++j) {
      Eigen::Vector2d goal;
      double gain;
      if (resetting) {
        stray[j] = 0;
        goal = Eigen::Vector2d(0.5, 0.5);
        gain = kResetGain;
        labels[j] = 2;
      } else {
        if (!stray[j] && t > 0 && unif(rng) < c.escape_probability) {
          stray[j] = 1;
          const Eigen::Vector2d& p = pos[j];
          const std::array<double, 4> gaps = {p.x(), 1.0 - p.x(), p.y(), 1.0 - p.y()};
          const auto side = std::min_element(gaps.begin(), gaps.end()) - gaps.begin();
          stray_target[j] = p;
          if (side == 0) stray_target[j].x() = -kStrayOffset;
          if (side == 1) stray_target[j].x() = 1.0 + kStrayOffset;
          if (side == 2) stray_target[j].y() = -kStrayOffset;
          if (side == 3) stray_target[j].y() = 1.0 + kStrayOffset;
        }
        if (stray[j]) {
          goal = stray_target[j];
          gain = kStrayGain;
          labels[j] = 1;
        } else {
          goal = target(letter, step, j);
          gain = kFollowGain;
          labels[j] = 0;
        }
      }
      if (t > 0) {
        Eigen::Vector2d next = pos[j] + gain * (goal - pos[j]);
        next.x() += c.noise_sd * normal(rng);
        next.y() += c.noise_sd * normal(rng);
        // Strays and players walking back during a reset are not reflected.
        if (!stray[j] && !resetting) next = Eigen::Vector2d(reflect(next.x()), reflect(next.y()));
        pos[j] = next;
      }
      for (int e = 0; e < c.extra_dims; ++e) extra[j * c.extra_dims + e] = extra_sd * normal(rng);
    }
    rows.push_back(pos);
    extra_rows.push_back(std::move(extra));
    sys.push_back(resetting ? reset_label : letter);
    ent.push_back(std::move(labels));

    if (resetting) {
      if (--reset_left == 0) step = 0;  // repeat the interrupted letter
    } else if (++step == c.letter_duration) {
      step = 0;
      ++letter;
    }
  }

  const int T = static_cast<int>(sys.size());
  const int D = 2 + c.extra_dims;
  LabeledDataset out;
  std::vector<Eigen::MatrixXd> obs(J, Eigen::MatrixXd(T, D));
  out.latents.entity_states.resize(T, J);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) {
      obs[j](t, 0) = rows[t][j].x();
      obs[j](t, 1) = rows[t][j].y();
      for (int e = 0; e < c.extra_dims; ++e) obs[j](t, 2 + e) = extra_rows[t][j * c.extra_dims + e];
      out.latents.entity_states(t, j) = ent[t][j];
    }
  out.data = make_dataset(std::move(obs));
  out.latents.system_states = std::move(sys);
  return out;
}

}  // namespace

std::vector<LabeledDataset> generate_marching_band(const MarchingBandConfig& config) {
  config.validate();
  std::vector<LabeledDataset> out;
  out.reserve(config.n_sequences);
  for (int i = 0; i < config.n_sequences; ++i)
    out.push_back(band_sequence(config, mix_seed(config.seed, static_cast<std::uint64_t>(i))));
  return out;
}

}  // namespace hsrdm
