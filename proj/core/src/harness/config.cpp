#include "lily/harness/config.hpp"

#include "lily/datagen/dataset_io.hpp"
#include "lily/error.hpp"
#include "lily/estimator/checkpoint.hpp"
#include "lily/io.hpp"

#include <json.hpp>

namespace lily::harness {
namespace {

using nlohmann::json;

}  // namespace

void validate(const ExperimentConfig& c) {
  if (c.name.empty()) throw InvalidInput("experiment name must not be empty");
  if (c.seeds.empty()) throw InvalidInput("experiment needs at least one seed");
  if (c.audit_points < 1) throw InvalidInput("audit_points must be positive");
  if (c.adapt.enabled && (c.adapt.held_out_segments < 2 || c.adapt.samples < 1 || c.adapt.max_steps < 1)) {
    throw InvalidInput("adaptation needs >= 2 held-out segments and positive samples and steps");
  }
  if (c.beta_grid.empty() != c.gamma_grid.empty()) throw InvalidInput("weight grid needs both beta and gamma values");
  for (double w : c.beta_grid) {
    if (!(w >= 0.0)) throw InvalidInput("grid weights must be non-negative");
  }
  for (double w : c.gamma_grid) {
    if (!(w >= 0.0)) throw InvalidInput("grid weights must be non-negative");
  }
  datagen::validate(c.data);
  estimator::validate(c.train);
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j{{"schema_version", kExperimentSchemaVersion},
         {"name", c.name},
         {"data", json::parse(datagen::config_to_json(c.data))},
         {"data_seed", c.data_seed},
         {"train", json::parse(estimator::train_config_to_json(c.train))},
         {"seeds", c.seeds},
         {"outputs", c.outputs.string()},
         {"audit", c.audit},
         {"audit_points", c.audit_points},
         {"adapt",
          {{"enabled", c.adapt.enabled},
           {"held_out_segments", c.adapt.held_out_segments},
           {"samples", c.adapt.samples},
           {"max_steps", c.adapt.max_steps}}},
         {"grid", {{"beta", c.beta_grid}, {"gamma", c.gamma_grid}}}};
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
    const int version = j.value("schema_version", kExperimentSchemaVersion);
    if (version > kExperimentSchemaVersion) {
      throw InvalidInput("experiment config schema_version " + std::to_string(version) + " is newer than supported");
    }
    c.name = j.value("name", c.name);
    if (j.contains("data")) c.data = datagen::config_from_json(j.at("data").dump());
    c.data_seed = j.value("data_seed", c.data_seed);
    if (j.contains("train")) c.train = estimator::train_config_from_json(j.at("train").dump());
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.outputs = j.value("outputs", c.outputs.string());
    c.audit = j.value("audit", c.audit);
    c.audit_points = j.value("audit_points", c.audit_points);
    if (j.contains("adapt")) {
      const json& a = j.at("adapt");
      c.adapt.enabled = a.value("enabled", true);
      c.adapt.held_out_segments = a.value("held_out_segments", c.adapt.held_out_segments);
      c.adapt.samples = a.value("samples", c.adapt.samples);
      c.adapt.max_steps = a.value("max_steps", c.adapt.max_steps);
    }
    if (j.contains("grid")) {
      c.beta_grid = j.at("grid").value("beta", std::vector<double>{});
      c.gamma_grid = j.at("grid").value("gamma", std::vector<double>{});
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(io::read_text(path));
}

void apply_paper_scale(ExperimentConfig& c) {
  if (c.data.num_segments <= 1) {
    c.data.samples_per_segment = 100000;
  } else {
    c.data.samples_per_segment = 7500;
  }
}

}  // namespace lily::harness
