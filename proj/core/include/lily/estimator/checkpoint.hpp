#pragma once

#include "lily/estimator/model.hpp"
#include "lily/estimator/train.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lily::estimator {

inline constexpr int kCheckpointFormatVersion = 1;

/// Checkpoint directory: params.bin (little-endian float64 values),
/// params.json (format_version, model config, standardization, layout
/// manifest), cfg.json (training config) and history.csv
/// (epoch,train_elbo,val_elbo,mcc_if_available).
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const TrainConfig& cfg,
                     const std::vector<EpochRecord>& history);

struct Checkpoint {
  ModelParams params;
  TrainConfig cfg;
  std::vector<EpochRecord> history;
};

/// LoadError on a missing file, bad header, layout mismatch or newer
/// format_version.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

std::string train_config_to_json(const TrainConfig& cfg);
/// Unknown keys are ignored; missing keys keep their defaults. InvalidInput on
/// malformed JSON or invalid values.
TrainConfig train_config_from_json(const std::string& text);

std::string history_to_csv(const std::vector<EpochRecord>& history);

}  // namespace lily::estimator
