// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsrdm/forecasting.hpp"
#include "hsrdm/inference.hpp"
#include "hsrdm/synthetic.hpp"

namespace hsrdm {

enum class GeneratorKind { none, figure_eight, marching_band };

struct DataConfig {
  std::filesystem::path path;  // dataset directory; used when generator is none
  GeneratorKind generator = GeneratorKind::none;
  FigureEightConfig figure_eight;
  MarchingBandConfig marching_band;
};

struct ForecastConfig {
  ForecastRequest request;
  bool mask_during_fit = true;  // fit never sees the targets inside the window
};

// Everything one experiment needs. The top-level seed drives CAVI.
struct ExperimentConfig {
  ModelSpec model;
  CaviConfig inference;
  DataConfig data;
  std::optional<ForecastConfig> forecast;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 120;
};

// Thrown by load_config; what() lists every violation, one per line.
class ConfigError : public Error {
 public:
  ConfigError(std::string code, std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Relative paths resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
std::string dump_config(const ExperimentConfig& config);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

std::string to_string(GeneratorKind kind);
std::string to_string(EmissionFamily family);

}  // namespace hsrdm
