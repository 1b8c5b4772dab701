#include "lily/datagen/dataset_io.hpp"

#include "lily/error.hpp"
#include "lily/io.hpp"

#include <json.hpp>

#include <span>

namespace lily::datagen {
namespace {

using nlohmann::json;

json config_json(const ProcessConfig& c) {
  return json{
      {"regime", std::string(to_string(c.regime))},
      {"n_latent", c.n_latent},
      {"lag", c.lag},
      {"partition", {{"fixed", c.partition.fixed}, {"changing", c.partition.changing}, {"obs", c.partition.obs}}},
      {"noise_sigma", c.noise_sigma},
      {"noise_coupling", std::string(to_string(c.coupling))},
      {"gn_lambda", c.gn_lambda},
      {"gn_beta", c.gn_beta},
      {"num_segments", c.num_segments},
      {"samples_per_segment", c.samples_per_segment},
      {"burn_in", c.burn_in},
      {"transition_gain", c.transition_gain},
      {"scalar_modulation", c.scalar_modulation},
      {"seed", c.seed},
  };
}

// Missing keys keep their defaults; a missing partition falls back to the
// regime's natural one.
ProcessConfig parse_config(const json& j) {
  ProcessConfig c;
  c.regime = regime_from_string(j.at("regime").get<std::string>());
  c.n_latent = j.value("n_latent", c.n_latent);
  c.lag = j.value("lag", c.lag);
  if (j.contains("partition")) {
    const json& p = j.at("partition");
    c.partition = {p.value("fixed", 0), p.value("changing", 0), p.value("obs", 0)};
  } else {
    c.partition = default_partition(c.regime, c.n_latent);
    if (c.regime == Regime::kModular && c.partition.total() != c.n_latent) c.n_latent = c.partition.total();
  }
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.coupling = coupling_from_string(j.value("noise_coupling", std::string("history")));
  c.gn_lambda = j.value("gn_lambda", c.gn_lambda);
  c.gn_beta = j.value("gn_beta", c.gn_beta);
  c.num_segments = j.value("num_segments", c.num_segments);
  c.samples_per_segment = j.value("samples_per_segment", c.samples_per_segment);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.transition_gain = j.value("transition_gain", c.transition_gain);
  c.scalar_modulation = j.value("scalar_modulation", c.scalar_modulation);
  c.seed = j.value("seed", c.seed);
  return c;
}

json changes_json(const LatentProcessSpec& spec) {
  json segs = json::array();
  for (const SegmentChange& s : spec.segments) {
    json kernel = json::array();
    for (Eigen::Index r = 0; r < s.dyn_kernel.rows(); ++r) {
      kernel.push_back(std::vector<double>(s.dyn_kernel.row(r).begin(), s.dyn_kernel.row(r).end()));
    }
    segs.push_back({{"modulation", s.modulation}, {"obs_mean", s.obs_mean}, {"obs_var", s.obs_var}, {"dyn_kernel", kernel}});
  }
  return json{{"segments", segs}};
}

Matrix to_matrix(const std::vector<double>& flat, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(flat.data(), rows, cols);
}

}  // namespace

std::string config_to_json(const ProcessConfig& config) { return config_json(config).dump(2); }

ProcessConfig config_from_json(const std::string& json_text) {
  try {
    return parse_config(json::parse(json_text));
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("process config: ") + e.what());
  }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json meta = config_json(ds.spec.config);
  meta["format_version"] = kDatasetFormatVersion;
  meta["obs_dim"] = ds.obs_dim();
  meta["noise_seed"] = ds.seed;
  io::write_text(dir / "meta.json", meta.dump(2) + "\n");
  io::write_text(dir / "changes.json", changes_json(ds.spec).dump(2) + "\n");
  io::write_f64(dir / "obs.bin", std::span<const double>(ds.observations.data(), ds.observations.size()));
  io::write_f64(dir / "latents.bin", std::span<const double>(ds.latents.data(), ds.latents.size()));
  io::write_f64(dir / "noise.bin", std::span<const double>(ds.noise.data(), ds.noise.size()));
  io::write_i32(dir / "segments.bin", ds.segments);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  json meta;
  try {
    meta = json::parse(io::read_text(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw LoadError(LoadError::Kind::kMalformedHeader, std::string("meta.json: ") + e.what());
  }
  if (!meta.is_object() || !meta.contains("format_version") || !meta["format_version"].is_number_integer()) {
    throw LoadError(LoadError::Kind::kMalformedHeader, "meta.json: missing format_version");
  }
  const int version = meta["format_version"].get<int>();
  if (version != kDatasetFormatVersion) {
    throw LoadError(LoadError::Kind::kUnsupportedVersion, "meta.json: unsupported format_version " + std::to_string(version));
  }

  Dataset ds;
  int obs_dim = 0;
  try {
    ds.spec = build_spec(parse_config(meta));
    obs_dim = meta.at("obs_dim").get<int>();
    ds.seed = meta.value("noise_seed", ds.spec.config.seed);
  } catch (const json::exception& e) {
    throw LoadError(LoadError::Kind::kMalformedHeader, std::string("meta.json: ") + e.what());
  } catch (const InvalidSpec& e) {
    throw LoadError(LoadError::Kind::kMalformedHeader, std::string("meta.json: ") + e.what());
  }

  const ProcessConfig& c = ds.spec.config;
  const auto rows = static_cast<Eigen::Index>(c.num_segments) * c.samples_per_segment;
  const auto n = static_cast<std::size_t>(rows);
  ds.observations = to_matrix(io::read_f64(dir / "obs.bin", n * obs_dim), rows, obs_dim);
  ds.latents = to_matrix(io::read_f64(dir / "latents.bin", n * c.n_latent), rows, c.n_latent);
  ds.noise = to_matrix(io::read_f64(dir / "noise.bin", n * c.n_latent), rows, c.n_latent);
  ds.segments = io::read_i32(dir / "segments.bin", n);
  for (std::int32_t s : ds.segments) {
    if (s < 0 || s >= c.num_segments) throw LoadError(LoadError::Kind::kSizeMismatch, "segments.bin: index out of range");
  }
  return ds;
}

}  // namespace lily::datagen
