#pragma once

#include "lily/datagen/dataset.hpp"

#include <filesystem>

namespace lily::datagen {

inline constexpr int kDatasetFormatVersion = 1;

/// Writes `dir`/meta.json, obs.bin, latents.bin, noise.bin, segments.bin and
/// changes.json (little-endian, row-major). Creates `dir` if needed.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Inverse of save_dataset; the process spec is rebuilt from the stored
/// knobs and seed. Throws LoadError with kMalformedHeader, kSizeMismatch or
/// kUnsupportedVersion.
Dataset load_dataset(const std::filesystem::path& dir);

/// Process knobs <-> the JSON object used by meta.json and experiment configs.
/// Declared here so the harness shares one parser.
std::string config_to_json(const ProcessConfig& config);
ProcessConfig config_from_json(const std::string& json_text);

}  // namespace lily::datagen
