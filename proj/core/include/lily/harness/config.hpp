#pragma once

#include "lily/datagen/process.hpp"
#include "lily/estimator/train.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lily::harness {

inline constexpr int kExperimentSchemaVersion = 1;

/// Few-shot shift correction on fresh segments drawn past the training ones.
struct AdaptStage {
  bool enabled = false;
  int held_out_segments = 10;
  int samples = 16;  // rows per held-out segment
  int max_steps = 2000;
};

struct ExperimentConfig {
  std::string name = "experiment";
  datagen::ProcessConfig data;
  std::uint64_t data_seed = 0;  // noise stream of the generated dataset
  estimator::TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path outputs = "runs";
  bool audit = false;
  int audit_points = 6;
  AdaptStage adapt;
  /// Optional weight grid; every (beta, gamma) pair is trained and the one
  /// with the best validation ELBO at the configured weights is kept.
  std::vector<double> beta_grid;
  std::vector<double> gamma_grid;
};

/// Throws InvalidInput: empty seeds, empty name, non-positive adapt sizes,
/// a grid with only one of its two axes, or invalid data/train sections.
void validate(const ExperimentConfig& cfg);

/// {"schema_version": 1, "name", "data": {...}, "data_seed", "train": {...},
///  "seeds", "outputs", "audit", "audit_points", "adapt": {...}, "grid": {...}}
std::string experiment_config_to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults. InvalidInput on malformed JSON or a
/// newer schema_version.
ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Sample counts of the original synthetic study: 100,000 rows for single
/// segment regimes, 7,500 per segment otherwise.
void apply_paper_scale(ExperimentConfig& cfg);

}  // namespace lily::harness
