// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsrdm/chain.hpp"
#include "hsrdm/config.hpp"
#include "hsrdm/evaluation.hpp"
#include "hsrdm/forecasting.hpp"
#include "hsrdm/inference.hpp"
#include "hsrdm/io.hpp"
#include "hsrdm/synthetic.hpp"

namespace hsrdm::cli {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int env_threads() {
  const char* v = std::getenv("HSRDM_NUM_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw Error("InvalidConfig", "HSRDM_NUM_THREADS must be a positive integer");
  return static_cast<int>(n);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << text;
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("ParseError", path.string() + ": " + e.what());
  }
}

std::ostringstream csv_stream() {
  std::ostringstream os;
  os << std::setprecision(17);
  return os;
}

// Numeric CSV with one header line.
std::vector<std::vector<double>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

fs::path checkpoint_dir(const fs::path& model) {
  return fs::exists(model / "manifest") ? model : model / "checkpoint";
}

LabeledDataset generate(const DataConfig& data) {
  switch (data.generator) {
    case GeneratorKind::figure_eight: return generate_figure_eight(data.figure_eight);
    case GeneratorKind::marching_band: return concatenate(generate_marching_band(data.marching_band));
    default: throw Error("InvalidConfig", "data: no generator configured");
  }
}

TimeSeriesDataset resolve_data(const ExperimentConfig& config, const std::string& override_dir) {
  if (!override_dir.empty()) return load_dataset(override_dir);
  if (!config.data.path.empty()) return load_dataset(config.data.path);
  return generate(config.data).data;
}

void mask_targets(TimeSeriesDataset& data, const ForecastRequest& request) {
  const int T = data.num_timesteps();
  if (!data.has_mask())
    data.observed =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(T, data.num_entities(), true);
  for (int j : request.target_entities)
    for (int t = request.begin; t <= request.end; ++t) data.observed(t, j) = false;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string preset, config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  DataConfig data;
  if (!a.config.empty()) {
    data = load_config(a.config).data;
  } else if (a.preset == "figure-eight") {
    data.generator = GeneratorKind::figure_eight;
  } else if (a.preset == "marching-band") {
    data.generator = GeneratorKind::marching_band;
  } else {
    throw UsageError("generate needs --preset figure-eight|marching-band or --config");
  }
  if (a.seed) {
    data.figure_eight.seed = *a.seed;
    data.marching_band.seed = *a.seed;
  }
  const LabeledDataset d = generate(data);
  save_dataset(a.out, d.data, &d.latents);
  out << "wrote " << d.data.num_timesteps() << " x " << d.data.num_entities() << " x "
      << d.data.obs_dim() << " dataset to " << a.out << "\n";
  return kExitOk;
}

struct FitArgs {
  std::string config, data, out;
  std::optional<std::uint64_t> seed;
};

void write_trace(const fs::path& path, const std::vector<ElboTraceEntry>& trace) {
  auto os = csv_stream();
  os << "iteration,phase,elbo_plus_log_prior\n";
  for (const auto& e : trace) os << e.iteration << "," << e.phase << "," << e.value << "\n";
  write_text(path, os.str());
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  ExperimentConfig config = load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  config.inference.seed = config.seed;
  config.inference.threads = env_threads();
  const fs::path dir = a.out.empty() ? config.output_dir : fs::path(a.out);
  TimeSeriesDataset data = resolve_data(config, a.data);
  if (config.forecast && config.forecast->mask_during_fit) {
    config.forecast->request.validate(data);
    mask_targets(data, config.forecast->request);
    data = impute_carry_forward(data);
  }

  const auto t0 = std::chrono::steady_clock::now();
  CaviResult result;
  try {
    result = run_cavi(data, config.model, config.inference);
  } catch (const CaviAborted& e) {
    if (e.last_valid()) {
      save_checkpoint(dir / "last_valid", e.last_valid()->params);
      write_trace(dir / "last_valid" / "trace.csv", e.last_valid()->trace);
    }
    throw;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  save_checkpoint(dir / "checkpoint", result.params);
  write_trace(dir / "trace.csv", result.trace);
  save_config(dir / "config.json", config);
  Json summary;
  summary["digest"] = checkpoint_digest(dir / "checkpoint");
  summary["final_objective"] = result.trace.back().value;
  summary["iterations"] = result.trace.back().iteration;
  summary["seconds"] = seconds;
  write_text(dir / "fit.json", summary.dump(2) + "\n");
  out << "fit finished: objective " << std::setprecision(10) << result.trace.back().value
      << ", checkpoint " << (dir / "checkpoint").string() << "\n";
  return kExitOk;
}

struct ForecastArgs {
  std::string config, data, model, out;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out) {
  ExperimentConfig config = load_config(a.config);
  if (!config.forecast) throw Error("InvalidConfig", "forecast: section missing");
  ForecastRequest request = config.forecast->request;
  if (a.samples) request.n_samples = *a.samples;
  if (a.seed) request.seed = *a.seed;
  config.inference.threads = env_threads();
  const TimeSeriesDataset data = resolve_data(config, a.data);
  const ModelParams params = load_checkpoint(checkpoint_dir(a.model));
  const ForecastResult r = partial_forecast(params, data, request, config.inference);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  for (std::size_t n = 0; n < r.samples.size(); ++n) {
    auto os = csv_stream();
    os << "entity,t";
    for (int d = 0; d < data.obs_dim(); ++d) os << ",x" << d;
    os << "\n";
    for (std::size_t i = 0; i < r.target_entities.size(); ++i) {
      const Eigen::MatrixXd& x = r.samples[n][i];
      for (Eigen::Index u = 0; u < x.rows(); ++u) {
        os << r.target_entities[i] << "," << r.begin + u;
        for (Eigen::Index d = 0; d < x.cols(); ++d) os << "," << x(u, d);
        os << "\n";
      }
    }
    std::ostringstream name;
    name << "sample_" << std::setw(3) << std::setfill('0') << n << ".csv";
    write_text(dir / name.str(), os.str());
  }
  {
    auto os = csv_stream();
    os << "t,system_state\n";
    for (std::size_t u = 0; u < r.system_path.size(); ++u) os << r.begin + u << "," << r.system_path[u] << "\n";
    write_text(dir / "system_path.csv", os.str());
  }
  Json req;
  req["target_entities"] = request.target_entities;
  req["begin"] = request.begin;
  req["end"] = request.end;
  req["n_samples"] = request.n_samples;
  req["seed"] = request.seed;
  write_text(dir / "request.json", req.dump(2) + "\n");
  out << "wrote " << r.samples.size() << " forecast samples to " << dir.string() << "\n";
  return kExitOk;
}

struct SegmentArgs {
  std::string data, model, out;
  int rounds = 5;
  int clusters = 0;
  std::uint64_t seed = 120;
};

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
  const TimeSeriesDataset data = load_dataset(a.data);
  const ModelParams params = load_checkpoint(checkpoint_dir(a.model));
  const VariationalPosterior q = infer_posterior(params, data, a.rounds, env_threads());
  const int T = data.num_timesteps();
  const int J = data.num_entities();

  Eigen::MatrixXi entity_states(T, J);
  for (int j = 0; j < J; ++j) {
    const std::vector<int> path = viterbi(build_vez_spec(params, data, q.q_s, j));
    for (int t = 0; t < T; ++t) entity_states(t, j) = path[t];
  }
  std::vector<int> system_states;
  int n_system = params.L;
  if (params.L > 1) {
    system_states = viterbi(build_ves_spec(params, data, q.q_z));
  } else {
    // No system chain: cluster the joint entity configuration instead.
    n_system = a.clusters > 0 ? a.clusters : 1;
    system_states = n_system > 1 ? cluster_entity_states(entity_states, params.K, n_system, a.seed)
                                 : std::vector<int>(T, 0);
  }

  const fs::path dir = a.out;
  fs::create_directories(dir);
  {
    auto os = csv_stream();
    os << "t,system_state\n";
    for (int t = 0; t < T; ++t) os << t << "," << system_states[t] << "\n";
    write_text(dir / "system_states.csv", os.str());
  }
  {
    auto os = csv_stream();
    os << "t";
    for (int j = 0; j < J; ++j) os << ",entity_" << j;
    os << "\n";
    for (int t = 0; t < T; ++t) {
      os << t;
      for (int j = 0; j < J; ++j) os << "," << entity_states(t, j);
      os << "\n";
    }
    write_text(dir / "entity_states.csv", os.str());
  }
  if (has_latents(a.data)) {
    const LatentTrajectories truth = load_latents(a.data);
    int n = n_system;
    for (int s : truth.system_states) n = std::max(n, s + 1);
    const SegmentationScore score = segmentation_accuracy(system_states, truth.system_states, n);
    Json report;
    report["system_accuracy"] = score.accuracy;
    report["permutation"] = score.permutation;
    write_text(dir / "report.json", report.dump(2) + "\n");
    out << "system segmentation accuracy " << std::setprecision(6) << score.accuracy << "\n";
  }
  out << "wrote segmentation to " << dir.string() << "\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string data, out;
  std::vector<std::string> forecasts;
  std::string segments;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.forecasts.empty() && a.segments.empty())
    throw UsageError("evaluate needs --forecast and/or --segments");
  const TimeSeriesDataset data = load_dataset(a.data);
  Json metrics;

  if (!a.forecasts.empty()) {
    std::vector<std::vector<double>> mse;
    Json trials = Json::array();
    for (const auto& fdir : a.forecasts) {
      const Json req = read_json_file(fs::path(fdir) / "request.json");
      const auto targets = req.at("target_entities").get<std::vector<int>>();
      const int begin = req.at("begin").get<int>();
      const int end = req.at("end").get<int>();
      const int n_samples = req.at("n_samples").get<int>();
      std::vector<double> trial;
      std::vector<double> dv, inb;
      for (int n = 0; n < n_samples; ++n) {
        std::ostringstream name;
        name << "sample_" << std::setw(3) << std::setfill('0') << n << ".csv";
        const auto rows = read_csv(fs::path(fdir) / name.str());
        const int u = end - begin + 1;
        const int D = data.obs_dim();
        std::vector<Eigen::MatrixXd> forecast(targets.size(), Eigen::MatrixXd(u, D));
        for (const auto& row : rows) {
          const auto it = std::find(targets.begin(), targets.end(), static_cast<int>(row.at(0)));
          const int t = static_cast<int>(row.at(1));
          if (it == targets.end() || t < begin || t > end || static_cast<int>(row.size()) != D + 2)
            throw Error("ShapeMismatch", "forecast row does not match request.json");
          for (int d = 0; d < D; ++d) forecast[it - targets.begin()](t - begin, d) = row[2 + d];
        }
        double total = 0.0;
        std::vector<Eigen::MatrixXd> with_start;
        for (std::size_t i = 0; i < targets.size(); ++i) {
          const auto truth = data.observations[targets[i]].middleRows(begin, u);
          total += forecast_mse(forecast[i], truth);
          Eigen::MatrixXd traj(u + 1, D);
          traj.row(0) = data.observations[targets[i]].row(begin - 1);
          traj.bottomRows(u) = forecast[i];
          with_start.push_back(std::move(traj));
        }
        trial.push_back(total / static_cast<double>(targets.size()));
        if (D == 2) {
          try {
            dv.push_back(directional_variation(with_start));
          } catch (const Error&) {
          }
          inb.push_back(pct_in_bounds(with_start, unit_square()));
        }
      }
      Json t;
      t["forecast"] = fdir;
      t["sample_mse"] = trial;
      if (!dv.empty()) t["directional_variation"] = dv;
      if (!inb.empty()) t["pct_in_bounds"] = inb;
      trials.push_back(t);
      mse.push_back(std::move(trial));
    }
    const ForecastSummary s = summarize_forecasts(mse);
    metrics["forecast"] = {{"trials", trials},
                           {"best_mse", s.best_mse},
                           {"best_trial", s.best_trial},
                           {"best_trial_mean", s.best_trial_mean},
                           {"best_trial_se", s.best_trial_se},
                           {"median_trial_mean", s.median_trial_mean}};
    out << "best sample MSE " << std::setprecision(6) << s.best_mse << ", median trial mean "
        << s.median_trial_mean << "\n";
  }

  if (!a.segments.empty()) {
    if (!has_latents(a.data)) throw Error("MissingLabels", "dataset has no latents file");
    const LatentTrajectories truth = load_latents(a.data);
    const auto rows = read_csv(fs::path(a.segments) / "system_states.csv");
    std::vector<int> pred;
    for (const auto& r : rows) pred.push_back(static_cast<int>(r.at(1)));
    int n = 1;
    for (int s : pred) n = std::max(n, s + 1);
    for (int s : truth.system_states) n = std::max(n, s + 1);
    const SegmentationScore score = segmentation_accuracy(pred, truth.system_states, n);
    metrics["segmentation"] = {{"system_accuracy", score.accuracy}, {"permutation", score.permutation}};
    out << "system segmentation accuracy " << std::setprecision(6) << score.accuracy << "\n";
  }

  const fs::path path = a.out.empty() ? fs::path("metrics.json") : fs::path(a.out);
  write_text(path, metrics.dump(2) + "\n");
  return kExitOk;
}

void error_record(std::ostream& err, const std::string& code, const std::string& message) {
  Json j;
  j["error"] = code;
  j["message"] = message;
  err << j.dump() << "\n";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical switching recurrent dynamical models"};
  app.name("hsrdm");
  app.require_subcommand(1, 1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic dataset with latent labels");
  g->add_option("--preset", gen.preset, "figure-eight or marching-band");
  g->add_option("--config", gen.config, "Take the data section of an experiment config");
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--out", gen.out, "Output dataset directory")->required();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a model with CAVI and write a checkpoint");
  f->add_option("--config", fit.config, "Experiment config")->required();
  f->add_option("--data", fit.data, "Dataset directory (overrides the config)");
  f->add_option("--out", fit.out, "Output directory (default: config output_dir)");
  f->add_option("--seed", fit.seed, "Fit seed (overrides the config)");

  ForecastArgs fc;
  auto* p = app.add_subcommand("forecast", "Sample partial forecasts from a fitted model");
  p->add_option("--config", fc.config, "Experiment config with a forecast section")->required();
  p->add_option("--data", fc.data, "Dataset directory (overrides the config)");
  p->add_option("--model", fc.model, "Fit output or checkpoint directory")->required();
  p->add_option("--out", fc.out, "Output directory")->required();
  p->add_option("--samples", fc.samples, "Number of samples");
  p->add_option("--seed", fc.seed, "Sampling seed");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score forecasts and segmentations against the data");
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--forecast", ev.forecasts, "Forecast directory, one per trial");
  e->add_option("--segments", ev.segments, "Segmentation directory");
  e->add_option("--out", ev.out, "Metrics JSON path (default metrics.json)");

  SegmentArgs sg;
  auto* s = app.add_subcommand("segment", "Decode system and entity state sequences");
  s->add_option("--data", sg.data, "Dataset directory")->required();
  s->add_option("--model", sg.model, "Fit output or checkpoint directory")->required();
  s->add_option("--out", sg.out, "Output directory")->required();
  s->add_option("--rounds", sg.rounds, "E-step alternations under the fixed model")->check(CLI::PositiveNumber);
  s->add_option("--clusters", sg.clusters, "Post-hoc system clusters when the model has L = 1");
  s->add_option("--seed", sg.seed, "k-means seed for post-hoc clustering");

  std::vector<const char*> argv{"hsrdm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    err << app.help();
    error_record(err, "UsageError", pe.what());
    return kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (f->parsed()) return cmd_fit(fit, out);
    if (p->parsed()) return cmd_forecast(fc, out);
    if (e->parsed()) return cmd_evaluate(ev, out);
    if (s->parsed()) return cmd_segment(sg, out);
  } catch (const UsageError& u) {
    err << app.help();
    error_record(err, "UsageError", u.what());
    return kExitUsage;
  } catch (const Error& x) {
    error_record(err, x.code(), x.what());
    return kExitFailure;
  } catch (const std::exception& x) {
    error_record(err, "InternalError", x.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace hsrdm::cli
