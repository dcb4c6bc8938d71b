#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "timberflow/scenario.hpp"

namespace timberflow {

inline constexpr int kReportSchemaVersion = 1;

struct ReportDocument {
  int schema_version = kReportSchemaVersion;
  std::string dataset_fingerprint;
  ScenarioConfig config;  // dataset path is not echoed
  ScenarioResult result;

  bool operator==(const ReportDocument&) const = default;
};

ReportDocument make_report(const std::string& fingerprint, const ScenarioConfig& cfg, ScenarioResult result);

// Canonical document: sorted keys, two-space indent, trailing newline.
// Costs are integer tree-metres.
std::string report_json(const ReportDocument& doc);
ReportDocument parse_report(std::string_view text, const std::string& source = "report");

// Human summary; costs shown in tree-km.
std::string report_text(const ReportDocument& doc);

// Flat tables and plot data, file name -> contents:
//   flows.csv historical_flows.csv permits.csv priorities.csv traders.csv
//   warnings.csv curves.csv sites.csv edges.csv [clusters.csv merges.csv]
std::map<std::string, std::string> report_tables(const ReportDocument& doc);

// report.json, report.txt and the tables into `dir`.
void write_report(const std::filesystem::path& dir, const ReportDocument& doc);

}  // namespace timberflow
