// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hsrdm/dataset.hpp"
#include "hsrdm/inference.hpp"
#include "hsrdm/model.hpp"

namespace hsrdm {

// Dataset directory layout:
//   meta          JSON: T, J, D, example_end_times, covariate dims, mask flag
//   observations  float64 little endian, row-major T x J x D
//   observed      uint8 T x J (present only with a mask)
//   system_covariates / entity_covariates   float64 T x d / T x J x d
//   latents       int32 T x (1 + J): system state then entity states
inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;

void save_dataset(const std::filesystem::path& dir, const TimeSeriesDataset& data,
                  const LatentTrajectories* latents = nullptr);
TimeSeriesDataset load_dataset(const std::filesystem::path& dir);
bool has_latents(const std::filesystem::path& dir);
LatentTrajectories load_latents(const std::filesystem::path& dir);

// Checkpoint directory: `manifest` (JSON naming every parameter block with
// its offset and shape) and `params.bin` (float64 little endian).
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& dir);

// 64-bit FNV-1a over the checkpoint files, as hex.
std::string checkpoint_digest(const std::filesystem::path& dir);

}  // namespace hsrdm
