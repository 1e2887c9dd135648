// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/config.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace hsrdm {
namespace fs = std::filesystem;
using detail::Json;
using detail::StrictReader;

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
  return out;
}

// Runs a validate() that throws and records its message under `path`.
template <class F>
void check(StrictReader& r, const char* key, F&& validate) {
  try {
    validate();
  } catch (const Error& e) {
    r.fail(key, e.what());
  }
}

std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

EmissionFamily family_from(StrictReader& r, const std::string& name) {
  if (name == "gaussian_var") return EmissionFamily::gaussian_var;
  if (name == "von_mises_ar") return EmissionFamily::von_mises_ar;
  r.fail("emission", "unknown emission family '" + name + "'");
  return EmissionFamily::gaussian_var;
}

ModelSpec read_model(StrictReader r) {
  ModelSpec m;
  r.get("L", m.L);
  r.get("K", m.K);
  std::string family = to_string(m.family);
  r.get("emission", family);
  m.family = family_from(r, family);
  m.system_recurrence = detail::recurrence_from_json(r.child("system_recurrence"));
  m.entity_recurrence = detail::recurrence_from_json(r.child("entity_recurrence"));
  StrictReader p = r.child("prior");
  p.get("alpha", m.prior.alpha);
  p.get("kappa", m.prior.kappa);
  p.get("init_concentration", m.prior.init_concentration);
  p.require(m.prior.alpha > 0.0, "alpha", "must be positive");
  p.require(m.prior.kappa >= 0.0, "kappa", "must be nonnegative");
  p.require(m.prior.init_concentration >= 1.0, "init_concentration", "must be at least 1");
  p.finish();
  r.require(m.L >= 1, "L", "must be >= 1");
  r.require(m.K >= 1, "K", "must be >= 1");
  r.finish();
  return m;
}

CaviConfig read_inference(StrictReader r) {
  CaviConfig c;
  r.get("n_iterations", c.n_iterations);
  r.get("m_step_substeps", c.m_step_substeps);
  r.get("initial_step", c.initial_step);
  r.get("backtrack_factor", c.backtrack_factor);
  r.get("max_line_search", c.max_line_search);
  r.get("tolerance", c.tolerance);
  r.get("bottom_iters", c.bottom_iters);
  r.get("top_iters", c.top_iters);
  r.get("init_on_velocities", c.init_on_velocities);
  r.get("learn_recurrence", c.learn_recurrence);
  r.get("threads", c.threads);
  check(r, "", [&] { c.validate(); });
  r.finish();
  return c;
}

FigureEightConfig read_figure_eight(StrictReader r) {
  FigureEightConfig c;
  r.get("J", c.J);
  r.get("T", c.T);
  r.get("periods", c.periods);
  r.get("stickiness", c.stickiness);
  r.get("rbf_scale", c.rbf_scale);
  r.get("rbf_bandwidth", c.rbf_bandwidth);
  r.get("a_high", c.a_high);
  r.get("a_low", c.a_low);
  r.get("noise_variance", c.noise_variance);
  r.get("system_period", c.system_period);
  r.get("recurrence", c.recurrence);
  r.get("seed", c.seed);
  check(r, "", [&] { c.validate(); });
  r.finish();
  return c;
}

MarchingBandConfig read_marching_band(StrictReader r) {
  MarchingBandConfig c;
  r.get("J", c.J);
  r.get("letters", c.letters);
  r.get("letter_duration", c.letter_duration);
  r.get("reset_duration", c.reset_duration);
  r.get("oob_threshold", c.oob_threshold);
  r.get("escape_probability", c.escape_probability);
  r.get("noise_sd", c.noise_sd);
  r.get("n_sequences", c.n_sequences);
  r.get("extra_dims", c.extra_dims);
  r.get("extra_dim_variance", c.extra_dim_variance);
  r.get("max_length", c.max_length);
  r.get("seed", c.seed);
  check(r, "", [&] { c.validate(); });
  r.finish();
  return c;
}

DataConfig read_data(StrictReader r, const fs::path& base) {
  DataConfig d;
  std::string path, generator = "none";
  r.get("path", path);
  r.get("generator", generator);
  if (generator == "figure_eight")
    d.generator = GeneratorKind::figure_eight;
  else if (generator == "marching_band")
    d.generator = GeneratorKind::marching_band;
  else if (generator != "none")
    r.fail("generator", "unknown generator '" + generator + "'");
  if (r.has("figure_eight") || d.generator == GeneratorKind::figure_eight)
    d.figure_eight = read_figure_eight(r.child("figure_eight"));
  else
    r.child("figure_eight");
  if (r.has("marching_band") || d.generator == GeneratorKind::marching_band)
    d.marching_band = read_marching_band(r.child("marching_band"));
  else
    r.child("marching_band");
  if (!path.empty()) {
    d.path = fs::path(path).is_absolute() ? fs::path(path) : base / path;
    if (!fs::is_directory(d.path)) r.fail("path", "no dataset directory at " + d.path.string());
  }
  r.require(!(d.path.empty() && d.generator == GeneratorKind::none), "",
            "needs a path or a generator");
  r.require(d.path.empty() || d.generator == GeneratorKind::none, "",
            "path and generator are exclusive");
  r.finish();
  return d;
}

ForecastConfig read_forecast(StrictReader r) {
  ForecastConfig f;
  auto& q = f.request;
  r.get("target_entities", q.target_entities);
  r.get("begin", q.begin);
  r.get("end", q.end);
  r.get("n_samples", q.n_samples);
  r.get("seed", q.seed);
  r.get("sample_system_path", q.sample_system_path);
  r.get("refit", q.refit);
  r.get("context_rounds", q.context_rounds);
  r.get("mask_during_fit", f.mask_during_fit);
  r.require(!q.target_entities.empty(), "target_entities", "must not be empty");
  r.require(q.begin >= 1 && q.end >= q.begin, "end", "needs 1 <= begin <= end");
  r.require(q.n_samples >= 1, "n_samples", "must be >= 1");
  r.require(q.context_rounds >= 0, "context_rounds", "must be >= 0");
  r.finish();
  return f;
}

Json model_json(const ModelSpec& m) {
  Json j;
  j["L"] = m.L;
  j["K"] = m.K;
  j["emission"] = to_string(m.family);
  j["system_recurrence"] = detail::recurrence_to_json(m.system_recurrence);
  j["entity_recurrence"] = detail::recurrence_to_json(m.entity_recurrence);
  j["prior"] = {{"alpha", m.prior.alpha},
                {"kappa", m.prior.kappa},
                {"init_concentration", m.prior.init_concentration}};
  return j;
}

Json inference_json(const CaviConfig& c) {
  return {{"n_iterations", c.n_iterations},   {"m_step_substeps", c.m_step_substeps},
          {"initial_step", c.initial_step},   {"backtrack_factor", c.backtrack_factor},
          {"max_line_search", c.max_line_search}, {"tolerance", c.tolerance},
          {"bottom_iters", c.bottom_iters},   {"top_iters", c.top_iters},
          {"init_on_velocities", c.init_on_velocities},
          {"learn_recurrence", c.learn_recurrence}, {"threads", c.threads}};
}

Json figure_eight_json(const FigureEightConfig& c) {
  return {{"J", c.J},
          {"T", c.T},
          {"periods", c.periods},
          {"stickiness", c.stickiness},
          {"rbf_scale", c.rbf_scale},
          {"rbf_bandwidth", c.rbf_bandwidth},
          {"a_high", c.a_high},
          {"a_low", c.a_low},
          {"noise_variance", c.noise_variance},
          {"system_period", c.system_period},
          {"recurrence", c.recurrence},
          {"seed", c.seed}};
}

Json marching_band_json(const MarchingBandConfig& c) {
  return {{"J", c.J},
          {"letters", c.letters},
          {"letter_duration", c.letter_duration},
          {"reset_duration", c.reset_duration},
          {"oob_threshold", c.oob_threshold},
          {"escape_probability", c.escape_probability},
          {"noise_sd", c.noise_sd},
          {"n_sequences", c.n_sequences},
          {"extra_dims", c.extra_dims},
          {"extra_dim_variance", c.extra_dim_variance},
          {"max_length", c.max_length},
          {"seed", c.seed}};
}

}  // namespace

ConfigError::ConfigError(std::string code, std::vector<std::string> violations)
    : Error(std::move(code), join_lines(violations)), violations_(std::move(violations)) {}

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::figure_eight: return "figure_eight";
    case GeneratorKind::marching_band: return "marching_band";
    default: return "none";
  }
}

std::string to_string(EmissionFamily family) {
  return family == EmissionFamily::von_mises_ar ? "von_mises_ar" : "gaussian_var";
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("ParseError", {"line " + std::to_string(line) + ", column " +
                                     std::to_string(col) + ": " + e.what()});
  }
  std::vector<std::string> violations;
  StrictReader r(&root, "", violations);
  ExperimentConfig c;
  if (!r.has("model")) r.fail("model", "missing section");
  if (!r.has("data")) r.fail("data", "missing section");
  c.model = read_model(r.child("model"));
  c.inference = read_inference(r.child("inference"));
  c.data = read_data(r.child("data"), base_dir);
  if (r.has("forecast")) c.forecast = read_forecast(r.child("forecast"));
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  c.output_dir = out;
  r.get("seed", c.seed);
  c.inference.seed = c.seed;
  r.finish();
  if (!violations.empty()) throw ConfigError("InvalidConfig", std::move(violations));
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string dump_config(const ExperimentConfig& c) {
  Json root;
  root["model"] = model_json(c.model);
  root["inference"] = inference_json(c.inference);
  Json data;
  if (!c.data.path.empty()) data["path"] = c.data.path.string();
  data["generator"] = to_string(c.data.generator);
  if (c.data.generator == GeneratorKind::figure_eight)
    data["figure_eight"] = figure_eight_json(c.data.figure_eight);
  if (c.data.generator == GeneratorKind::marching_band)
    data["marching_band"] = marching_band_json(c.data.marching_band);
  root["data"] = data;
  if (c.forecast) {
    const auto& q = c.forecast->request;
    root["forecast"] = {{"target_entities", q.target_entities},
                        {"begin", q.begin},
                        {"end", q.end},
                        {"n_samples", q.n_samples},
                        {"seed", q.seed},
                        {"sample_system_path", q.sample_system_path},
                        {"refit", q.refit},
                        {"context_rounds", q.context_rounds},
                        {"mask_during_fit", c.forecast->mask_during_fit}};
  }
  root["output_dir"] = c.output_dir.string();
  root["seed"] = c.seed;
  return root.dump(2) + "\n";
}

void save_config(const fs::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << dump_config(config);
}

}  // namespace hsrdm
