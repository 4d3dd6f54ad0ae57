#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "artready/protocol.hpp"

namespace artready {

/// Rows of a comma-separated document; double-quoted fields may hold commas
/// and doubled quotes. Blank lines are skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct TaskRates {
  std::vector<std::string> tasks;
  std::vector<double> sim;
  std::vector<double> real;
};

/// Header task,sim_rate,real_rate. Throws Error(InvalidValue) on bad cells.
TaskRates parse_rate_table(std::string_view text);
TaskRates load_rate_table(const std::filesystem::path& path);

/// Header object,<method>,<method>...; returns method -> scores in row order.
std::vector<std::pair<std::string, std::vector<double>>> parse_alignment_table(std::string_view text);

/// Long form task,method,mean,sd,n; returns method -> task -> summary.
std::map<std::string, std::map<std::string, TaskSummary>> parse_realism_table(std::string_view text);

}  // namespace artready
