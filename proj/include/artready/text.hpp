#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace artready {

/// Shortest decimal text that parses back to the identical double.
std::string format_number(double value);
/// Fixed-point formatting ("%.*f") for human-facing tables and prompts.
std::string format_fixed(double value, int digits);

/// Whole-string parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_number(std::string_view text);

std::string trim(std::string_view text);
std::vector<std::string> split_ws(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string to_lower(std::string_view text);

/// Case-insensitive substring test.
bool contains_ci(std::string_view haystack, std::string_view needle);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace artready
