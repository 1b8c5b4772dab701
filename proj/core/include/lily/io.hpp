#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

// Little-endian binary arrays and small text-file helpers shared by the
// dataset and checkpoint formats.
namespace lily::io {

void write_f64(const std::filesystem::path& path, std::span<const double> values);
void write_i32(const std::filesystem::path& path, std::span<const std::int32_t> values);

/// Reads exactly `expected` values; LoadError(kSizeMismatch) otherwise,
/// LoadError(kIo) if the file cannot be opened.
std::vector<double> read_f64(const std::filesystem::path& path, std::size_t expected);
std::vector<std::int32_t> read_i32(const std::filesystem::path& path, std::size_t expected);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lily::io
