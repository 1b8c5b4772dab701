#include "lily/auditor/report_io.hpp"

#include "lily/error.hpp"
#include "lily/io.hpp"

#include <json.hpp>

namespace lily::auditor {
namespace {

using nlohmann::json;

json report_json(const ConditionReport& r) {
  return json{{"theorem", std::string(to_string(r.theorem))},
              {"verdict", std::string(to_string(r.verdict))},
              {"singular_values", r.rank_report.singular_values},
              {"rank", r.rank_report.numeric_rank},
              {"num_points", r.num_points},
              {"seed", r.seed},
              {"zero_rows", r.zero_rows},
              {"vacuous", r.vacuous}};
}

}  // namespace

std::string report_to_json(const ConditionReport& report) { return report_json(report).dump(2); }

ConditionReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ConditionReport r;
    r.theorem = theorem_from_string(j.at("theorem").get<std::string>());
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    r.rank_report.singular_values = j.at("singular_values").get<std::vector<double>>();
    r.rank_report.numeric_rank = j.at("rank").get<int>();
    r.num_points = j.at("num_points").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.zero_rows = j.value("zero_rows", std::vector<int>{});
    r.vacuous = j.value("vacuous", false);
    const auto& sv = r.rank_report.singular_values;
    if (!sv.empty() && sv.front() > 0.0) r.rank_report.ratio = sv.back() / sv.front();
    return r;
  } catch (const json::exception& e) {
    throw LoadError(LoadError::Kind::kMalformedHeader, std::string("audit report: ") + e.what());
  } catch (const InvalidInput& e) {
    throw LoadError(LoadError::Kind::kMalformedHeader, std::string("audit report: ") + e.what());
  }
}

std::string modular_to_json(const ModularAudit& audit) {
  json blocks = json::array();
  for (const ConditionReport& r : audit.blocks) blocks.push_back(report_json(r));
  return json{{"theorem", std::string(to_string(Theorem::kC3))},
              {"verdict", std::string(to_string(audit.overall))},
              {"blocks", blocks}}
      .dump(2);
}

void save_report(const ConditionReport& report, const std::filesystem::path& path) {
  io::write_text(path, report_to_json(report) + "\n");
}

}  // namespace lily::auditor
