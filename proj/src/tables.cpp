#include "artready/tables.hpp"

#include "artready/error.hpp"
#include "artready/text.hpp"

namespace artready {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  const auto end_row = [&] {
    row.push_back(trim(field));
    field.clear();
    if (any) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') field += '"', ++i;
      else if (c == '"') quoted = false;
      else field += c;
      continue;
    }
    if (c == '"') quoted = any = true;
    else if (c == ',') row.push_back(trim(field)), field.clear(), any = true;
    else if (c == '\n') end_row();
    else if (c != '\r') {
      field += c;
      if (c != ' ' && c != '\t') any = true;
    }
  }
  end_row();
  return rows;
}

namespace {

double cell(const std::string& text, std::size_t line) {
  const auto v = parse_number(text);
  if (!v) throw Error(ErrorKind::InvalidValue, "not a number: '" + text + "'", "row " + std::to_string(line));
  return *v;
}

void expect_header(const std::vector<std::vector<std::string>>& rows, const std::vector<std::string>& header) {
  if (rows.empty() || rows[0].size() < header.size()) throw Error(ErrorKind::InvalidValue, "missing table header");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (to_lower(rows[0][i]) != header[i]) {
      throw Error(ErrorKind::InvalidValue, "expected column '" + header[i] + "'", "header");
    }
  }
}

}  // namespace

TaskRates parse_rate_table(std::string_view text) {
  const auto rows = parse_csv(text);
  expect_header(rows, {"task", "sim_rate", "real_rate"});
  TaskRates t;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw Error(ErrorKind::InvalidValue, "expected 3 columns", "row " + std::to_string(i));
    t.tasks.push_back(rows[i][0]);
    t.sim.push_back(cell(rows[i][1], i));
    t.real.push_back(cell(rows[i][2], i));
  }
  return t;
}

TaskRates load_rate_table(const std::filesystem::path& path) { return parse_rate_table(read_file(path.string())); }

std::vector<std::pair<std::string, std::vector<double>>> parse_alignment_table(std::string_view text) {
  const auto rows = parse_csv(text);
  expect_header(rows, {"object"});
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (std::size_t c = 1; c < rows[0].size(); ++c) out.push_back({rows[0][c], {}});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error(ErrorKind::InvalidValue, "ragged row", "row " + std::to_string(i));
    for (std::size_t c = 1; c < rows[i].size(); ++c) out[c - 1].second.push_back(cell(rows[i][c], i));
  }
  return out;
}

std::map<std::string, std::map<std::string, TaskSummary>> parse_realism_table(std::string_view text) {
  const auto rows = parse_csv(text);
  expect_header(rows, {"task", "method", "mean", "sd", "n"});
  std::map<std::string, std::map<std::string, TaskSummary>> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 5) throw Error(ErrorKind::InvalidValue, "expected 5 columns", "row " + std::to_string(i));
    const double n = cell(rows[i][4], i);
    if (n < 1 || n != static_cast<int>(n)) throw Error(ErrorKind::InvalidValue, "n must be a positive integer", "row " + std::to_string(i));
    out[rows[i][1]][rows[i][0]] = {cell(rows[i][2], i), cell(rows[i][3], i), static_cast<int>(n)};
  }
  return out;
}

}  // namespace artready
