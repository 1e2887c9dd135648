// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hsrdm/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json_util.hpp"

namespace hsrdm {
namespace fs = std::filesystem;
using detail::Json;

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class BinaryWriter {
 public:
  explicit BinaryWriter(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("IoError", "cannot write " + path.string());
  }
  template <class T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  std::size_t count = 0;

 private:
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const fs::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw Error("IoError", "cannot read " + path.string());
  }
  template <class T>
  T get() {
    T v;
    if (!in_.read(reinterpret_cast<char*>(&v), sizeof(T)))
      throw Error("IoError", "file ended early");
    return to_little(v);
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
};

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("ParseError", path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

namespace detail {

Json recurrence_to_json(const RecurrenceSpec& spec) {
  if (spec.kind == RecurrenceKind::custom)
    throw Error("InvalidRecurrence", "custom recurrences cannot be serialized");
  Json j;
  j["kind"] = to_string(spec.kind);
  switch (spec.kind) {
    case RecurrenceKind::rbf:
      j["center"] = vector_json(spec.center);
      j["bandwidth"] = spec.bandwidth;
      j["scale"] = spec.scale;
      break;
    case RecurrenceKind::out_of_bounds_indicators:
      j["lower"] = vector_json(spec.lower);
      j["upper"] = vector_json(spec.upper);
      j["include_position"] = spec.include_position;
      break;
    case RecurrenceKind::oob_count:
      j["lower"] = vector_json(spec.lower);
      j["upper"] = vector_json(spec.upper);
      break;
    case RecurrenceKind::elapsed_since_predicate:
      j["predicate"] = {{"origin_x", spec.predicate.origin_x},   {"origin_y", spec.predicate.origin_y},
                        {"angle_lo", spec.predicate.angle_lo},   {"angle_hi", spec.predicate.angle_hi},
                        {"min_radius", spec.predicate.min_radius}};
      j["horizon"] = spec.horizon;
      break;
    default:
      break;
  }
  if (spec.covariate_dim > 0) j["covariate_dim"] = spec.covariate_dim;
  return j;
}

RecurrenceSpec recurrence_from_json(StrictReader r) {
  RecurrenceSpec spec;
  std::string kind = "zero";
  r.get("kind", kind);
  try {
    spec.kind = recurrence_kind_from_string(kind);
  } catch (const Error&) {
    r.fail("kind", "unknown recurrence kind '" + kind + "'");
  }
  if (spec.kind == RecurrenceKind::custom) r.fail("kind", "custom recurrences are code-only");
  std::vector<double> center, lower = {0.0}, upper = {1.0};
  r.get("center", center);
  r.get("bandwidth", spec.bandwidth);
  r.get("scale", spec.scale);
  r.get("lower", lower);
  r.get("upper", upper);
  r.get("include_position", spec.include_position);
  r.get("horizon", spec.horizon);
  r.get("covariate_dim", spec.covariate_dim);
  spec.center = vector_from(center);
  spec.lower = vector_from(lower);
  spec.upper = vector_from(upper);
  StrictReader p = r.child("predicate");
  p.get("origin_x", spec.predicate.origin_x);
  p.get("origin_y", spec.predicate.origin_y);
  p.get("angle_lo", spec.predicate.angle_lo);
  p.get("angle_hi", spec.predicate.angle_hi);
  p.get("min_radius", spec.predicate.min_radius);
  p.finish();
  r.require(spec.bandwidth > 0.0, "bandwidth", "must be positive");
  r.require(spec.horizon > 0.0, "horizon", "must be positive");
  r.require(spec.covariate_dim >= 0, "covariate_dim", "must be nonnegative");
  r.require(spec.lower.size() > 0 && spec.lower.size() == spec.upper.size(), "lower",
            "lower and upper need matching nonzero lengths");
  r.finish();
  return spec;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets

void save_dataset(const fs::path& dir, const TimeSeriesDataset& data,
                  const LatentTrajectories* latents) {
  data.validate();
  fs::create_directories(dir);
  const int T = data.num_timesteps();
  const int J = data.num_entities();
  const int D = data.obs_dim();
  Json meta;
  meta["format_version"] = kDatasetFormatVersion;
  meta["T"] = T;
  meta["J"] = J;
  meta["D"] = D;
  meta["example_end_times"] = data.example_end_times;
  meta["system_covariate_dim"] = data.system_covariate_dim();
  meta["entity_covariate_dim"] = data.entity_covariate_dim();
  meta["has_mask"] = data.has_mask();
  meta["has_latents"] = latents != nullptr;
  write_json(dir / "meta", meta);

  {
    BinaryWriter w(dir / "observations");
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < J; ++j)
        for (int d = 0; d < D; ++d) w.put<double>(data.observations[j](t, d));
  }
  if (data.has_mask()) {
    BinaryWriter w(dir / "observed");
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < J; ++j) w.put<std::uint8_t>(data.observed(t, j) ? 1 : 0);
  }
  if (data.system_covariate_dim() > 0) {
    BinaryWriter w(dir / "system_covariates");
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < data.system_covariate_dim(); ++c) w.put<double>(data.system_covariates(t, c));
  }
  if (data.entity_covariate_dim() > 0) {
    BinaryWriter w(dir / "entity_covariates");
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < J; ++j)
        for (int c = 0; c < data.entity_covariate_dim(); ++c)
          w.put<double>(data.entity_covariates[j](t, c));
  }
  if (latents) {
    if (static_cast<int>(latents->system_states.size()) != T || latents->entity_states.rows() != T ||
        latents->entity_states.cols() != J)
      throw Error("FeatureDimMismatch", "latents do not match the dataset");
    BinaryWriter w(dir / "latents");
    for (int t = 0; t < T; ++t) {
      w.put<std::int32_t>(latents->system_states[t]);
      for (int j = 0; j < J; ++j) w.put<std::int32_t>(latents->entity_states(t, j));
    }
  }
}

namespace {

struct DatasetMeta {
  int T = 0, J = 0, D = 0, dg = 0, de = 0;
  bool mask = false, latents = false;
  std::vector<int> ends;
};

DatasetMeta read_meta(const fs::path& dir) {
  const Json j = read_json(dir / "meta");
  DatasetMeta m;
  try {
    if (j.at("format_version").get<int>() != kDatasetFormatVersion)
      throw Error("FormatVersion", "unsupported dataset format version");
    m.T = j.at("T").get<int>();
    m.J = j.at("J").get<int>();
    m.D = j.at("D").get<int>();
    m.ends = j.at("example_end_times").get<std::vector<int>>();
    m.dg = j.value("system_covariate_dim", 0);
    m.de = j.value("entity_covariate_dim", 0);
    m.mask = j.value("has_mask", false);
    m.latents = j.value("has_latents", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error("ParseError", (dir / "meta").string() + ": " + e.what());
  }
  return m;
}

}  // namespace

TimeSeriesDataset load_dataset(const fs::path& dir) {
  const DatasetMeta m = read_meta(dir);
  TimeSeriesDataset data;
  data.observations.assign(m.J, Eigen::MatrixXd(m.T, m.D));
  data.example_end_times = m.ends;
  {
    BinaryReader r(dir / "observations");
    for (int t = 0; t < m.T; ++t)
      for (int j = 0; j < m.J; ++j)
        for (int d = 0; d < m.D; ++d) data.observations[j](t, d) = r.get<double>();
    if (!r.at_end()) throw Error("IoError", "observations file longer than meta says");
  }
  if (m.mask) {
    BinaryReader r(dir / "observed");
    data.observed.resize(m.T, m.J);
    for (int t = 0; t < m.T; ++t)
      for (int j = 0; j < m.J; ++j) data.observed(t, j) = r.get<std::uint8_t>() != 0;
  }
  if (m.dg > 0) {
    BinaryReader r(dir / "system_covariates");
    data.system_covariates.resize(m.T, m.dg);
    for (int t = 0; t < m.T; ++t)
      for (int c = 0; c < m.dg; ++c) data.system_covariates(t, c) = r.get<double>();
  }
  if (m.de > 0) {
    BinaryReader r(dir / "entity_covariates");
    data.entity_covariates.assign(m.J, Eigen::MatrixXd(m.T, m.de));
    for (int t = 0; t < m.T; ++t)
      for (int j = 0; j < m.J; ++j)
        for (int c = 0; c < m.de; ++c) data.entity_covariates[j](t, c) = r.get<double>();
  }
  data.validate();
  return data;
}

bool has_latents(const fs::path& dir) { return fs::exists(dir / "latents"); }

LatentTrajectories load_latents(const fs::path& dir) {
  const DatasetMeta m = read_meta(dir);
  BinaryReader r(dir / "latents");
  LatentTrajectories lat;
  lat.system_states.resize(m.T);
  lat.entity_states.resize(m.T, m.J);
  for (int t = 0; t < m.T; ++t) {
    lat.system_states[t] = r.get<std::int32_t>();
    for (int j = 0; j < m.J; ++j) lat.entity_states(t, j) = r.get<std::int32_t>();
  }
  return lat;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

class BlockWriter {
 public:
  explicit BlockWriter(const fs::path& blob) : w_(blob) {}
  void add(const std::string& name, const Eigen::MatrixXd& m) {
    blocks_.push_back({{"name", name}, {"offset", offset_}, {"rows", m.rows()}, {"cols", m.cols()}});
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) w_.put<double>(m(r, c));
    offset_ += static_cast<std::int64_t>(m.size());
  }
  void add(const std::string& name, const Eigen::VectorXd& v) { add(name, Eigen::MatrixXd(v)); }
  void add(const std::string& name, double x) { add(name, Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, x))); }
  Json blocks() const { return blocks_; }

 private:
  BinaryWriter w_;
  Json blocks_ = Json::array();
  std::int64_t offset_ = 0;
};

class BlockReader {
 public:
  BlockReader(const Json& blocks, const fs::path& blob) {
    BinaryReader r(blob);
    std::vector<double> all;
    while (!r.at_end()) all.push_back(r.get<double>());
    for (const auto& b : blocks) {
      const auto off = b.at("offset").get<std::int64_t>();
      const auto rows = b.at("rows").get<Eigen::Index>();
      const auto cols = b.at("cols").get<Eigen::Index>();
      if (off < 0 || off + rows * cols > static_cast<std::int64_t>(all.size()))
        throw Error("IoError", "checkpoint block out of range");
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = all[off + i * cols + j];
      blocks_[b.at("name").get<std::string>()] = std::move(m);
    }
  }
  const Eigen::MatrixXd& get(const std::string& name) const {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) throw Error("IoError", "checkpoint lacks block " + name);
    return it->second;
  }
  double scalar(const std::string& name) const { return get(name)(0, 0); }
  Eigen::VectorXd vec(const std::string& name) const {
    const auto& m = get(name);
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  }

 private:
  std::map<std::string, Eigen::MatrixXd> blocks_;
};

std::string idx(const std::string& base, int a) { return base + "[" + std::to_string(a) + "]"; }
std::string idx(const std::string& base, int a, int b) {
  return base + "[" + std::to_string(a) + "][" + std::to_string(b) + "]";
}

}  // namespace

void save_checkpoint(const fs::path& dir, const ModelParams& p) {
  p.validate();
  fs::create_directories(dir);
  BlockWriter w(dir / "params.bin");
  w.add("system.log_tpm", p.system.log_tpm);
  w.add("system.weights", p.system.weights);
  for (int j = 0; j < p.J; ++j)
    for (int l = 0; l < p.L; ++l) {
      w.add(idx("entity", j, l) + ".log_tpm", p.entity.at(j, l).log_tpm);
      w.add(idx("entity", j, l) + ".weights", p.entity.at(j, l).weights);
    }
  for (int j = 0; j < p.J; ++j)
    for (int k = 0; k < p.K; ++k) {
      const std::string base = idx("emission", j, k);
      if (const auto* g = std::get_if<GaussianVarParams>(&p.emissions[j][k])) {
        w.add(base + ".A", g->A);
        w.add(base + ".b", g->b);
        w.add(base + ".Q", g->Q);
      } else {
        const auto& v = std::get<VonMisesArParams>(p.emissions[j][k]);
        w.add(base + ".a", v.a);
        w.add(base + ".drift", v.drift);
        w.add(base + ".concentration", v.concentration);
      }
    }
  w.add("init.pi_s", p.init.pi_s);
  for (int j = 0; j < p.J; ++j) {
    w.add(idx("init.pi_z", j), p.init.pi_z[j]);
    for (int k = 0; k < p.K; ++k) {
      const std::string base = idx("init.emission", j, k);
      if (const auto* g = std::get_if<GaussianInitParams>(&p.init.emissions[j][k])) {
        w.add(base + ".mean", g->mean);
        w.add(base + ".covariance", g->covariance);
      } else {
        const auto& v = std::get<VonMisesInitParams>(p.init.emissions[j][k]);
        w.add(base + ".mean", v.mean);
        w.add(base + ".concentration", v.concentration);
      }
    }
  }
  Json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["L"] = p.L;
  manifest["K"] = p.K;
  manifest["J"] = p.J;
  manifest["D"] = p.D;
  manifest["family"] = p.family == EmissionFamily::gaussian_var ? "gaussian_var" : "von_mises_ar";
  manifest["system_recurrence"] = detail::recurrence_to_json(p.system_recurrence);
  manifest["entity_recurrence"] = detail::recurrence_to_json(p.entity_recurrence);
  manifest["prior"] = {{"alpha", p.prior.alpha},
                       {"kappa", p.prior.kappa},
                       {"init_concentration", p.prior.init_concentration}};
  manifest["blob"] = "params.bin";
  manifest["blocks"] = w.blocks();
  write_json(dir / "manifest", manifest);
}

ModelParams load_checkpoint(const fs::path& dir) {
  const Json m = read_json(dir / "manifest");
  ModelParams p;
  try {
    if (m.at("format_version").get<int>() != kCheckpointFormatVersion)
      throw Error("FormatVersion", "unsupported checkpoint format version");
    std::vector<std::string> violations;
    const RecurrenceSpec sys = detail::recurrence_from_json(
        detail::StrictReader(&m.at("system_recurrence"), "system_recurrence", violations));
    const RecurrenceSpec ent = detail::recurrence_from_json(
        detail::StrictReader(&m.at("entity_recurrence"), "entity_recurrence", violations));
    if (!violations.empty()) throw Error("ParseError", violations.front());
    const std::string family = m.at("family").get<std::string>();
    p = make_default_params(m.at("L").get<int>(), m.at("K").get<int>(), m.at("J").get<int>(),
                            m.at("D").get<int>(),
                            family == "von_mises_ar" ? EmissionFamily::von_mises_ar
                                                     : EmissionFamily::gaussian_var,
                            sys, ent);
    p.prior.alpha = m.at("prior").at("alpha").get<double>();
    p.prior.kappa = m.at("prior").at("kappa").get<double>();
    p.prior.init_concentration = m.at("prior").at("init_concentration").get<double>();

    const BlockReader r(m.at("blocks"), dir / m.at("blob").get<std::string>());
    p.system.log_tpm = r.get("system.log_tpm");
    p.system.weights = r.get("system.weights");
    for (int j = 0; j < p.J; ++j)
      for (int l = 0; l < p.L; ++l) {
        p.entity.at(j, l).log_tpm = r.get(idx("entity", j, l) + ".log_tpm");
        p.entity.at(j, l).weights = r.get(idx("entity", j, l) + ".weights");
      }
    for (int j = 0; j < p.J; ++j)
      for (int k = 0; k < p.K; ++k) {
        const std::string base = idx("emission", j, k);
        if (p.family == EmissionFamily::gaussian_var)
          p.emissions[j][k] =
              GaussianVarParams{r.get(base + ".A"), r.vec(base + ".b"), r.get(base + ".Q")};
        else
          p.emissions[j][k] = VonMisesArParams{r.scalar(base + ".a"), r.scalar(base + ".drift"),
                                               r.scalar(base + ".concentration")};
      }
    p.init.pi_s = r.vec("init.pi_s");
    for (int j = 0; j < p.J; ++j) {
      p.init.pi_z[j] = r.vec(idx("init.pi_z", j));
      for (int k = 0; k < p.K; ++k) {
        const std::string base = idx("init.emission", j, k);
        if (p.family == EmissionFamily::gaussian_var)
          p.init.emissions[j][k] =
              GaussianInitParams{r.vec(base + ".mean"), r.get(base + ".covariance")};
        else
          p.init.emissions[j][k] =
              VonMisesInitParams{r.scalar(base + ".mean"), r.scalar(base + ".concentration")};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("ParseError", (dir / "manifest").string() + ": " + e.what());
  }
  p.validate();
  return p;
}

std::string checkpoint_digest(const fs::path& dir) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* name : {"manifest", "params.bin"}) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + (dir / name).string());
    char c;
    while (in.get(c)) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace hsrdm
