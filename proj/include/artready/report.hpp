#pragma once

#include <map>
#include <string>
#include <vector>

#include "artready/refine.hpp"

namespace artready {

inline constexpr const char* kReportSchemaVersion = "1.0";

ordered_json report_to_json(const ReadinessReport& report);
ordered_json trace_to_json(const RefineTrace& trace);
ordered_json stability_to_json(const StabilityResult& stability);

/// One row per report document: id, class, penetration, drift, oscillation
/// and query statistics. Rows keep the input order.
std::string summary_csv(const std::vector<ordered_json>& reports);

struct FailureDistribution {
  int total = 0;
  std::map<std::string, int> counts;  // every class present, zero included
  double query_mean = 0.0;
  double query_sd = 0.0;              // sample standard deviation
  int assets_with_queries = 0;
};

/// Class counts and query statistics over report documents.
/// Throws Error(InvalidArgument) for an empty list.
FailureDistribution failure_distribution(const std::vector<ordered_json>& reports);
ordered_json to_json(const FailureDistribution& d);
std::string to_text(const FailureDistribution& d);

/// Every *.json report under a directory tree, sorted by path.
std::vector<ordered_json> load_reports(const std::filesystem::path& dir);

}  // namespace artready
