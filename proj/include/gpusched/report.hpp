#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gpusched/scenario.hpp"
#include "gpusched/sim_engine.hpp"

#include "json.hpp"

namespace gpusched {

/// Column order of the CSV report.
const std::vector<std::string>& csv_columns();

void write_csv(std::ostream& out, std::span<const MetricsReport> reports);
nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
void write_json(std::ostream& out, std::span<const MetricsReport> reports);
std::vector<MetricsReport> read_json_reports(std::istream& in);

/// Writes `reports` to `path` (stdout when empty or "-"). Throws IoError.
void emit_report(std::span<const MetricsReport> reports, ReportFormat format, const std::string& path);

}  // namespace gpusched
