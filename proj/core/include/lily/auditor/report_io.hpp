#pragma once

#include "lily/auditor/audit.hpp"

#include <filesystem>
#include <string>

namespace lily::auditor {

/// {theorem, verdict, singular_values, rank, num_points, seed} plus
/// zero_rows and vacuous.
std::string report_to_json(const ConditionReport& report);
/// Parses the fields written by report_to_json (matrices are not stored).
/// Throws LoadError(kMalformedHeader) on bad input.
ConditionReport report_from_json(const std::string& text);

/// {theorem: "C3", verdict, blocks: [...]}.
std::string modular_to_json(const ModularAudit& audit);

void save_report(const ConditionReport& report, const std::filesystem::path& path);

}  // namespace lily::auditor
