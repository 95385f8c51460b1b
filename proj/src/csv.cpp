// SPDX-License-Identifier: Apache-2.0
#include "evomax/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "evomax/error.hpp"

namespace evomax {

void CsvTable::add_row(std::vector<CsvCell> row) {
  if (row.size() != columns.size()) {
    fail(ErrorCode::InvalidArgument, "row has " + std::to_string(row.size()) + " cells, expected " +
                                         std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string format_cell(const CsvCell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  return std::get<std::string>(cell);
}

std::string provenance_line(const std::string& config_hash) {
  return std::string("# evomax ") + EVOMAX_VERSION + " config=" + config_hash;
}

void write_csv(std::ostream& out, const CsvTable& table, const std::string& config_hash) {
  out << provenance_line(config_hash) << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const CsvTable& table, const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  write_csv(out, table, config_hash);
  if (!out) fail(ErrorCode::InvalidArgument, "write failed for " + path);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

ParsedCsv read_csv(std::istream& in) {
  ParsedCsv out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') {
      if (out.provenance.empty()) out.provenance = line;
      continue;
    }
    if (!header) {
      out.columns = split(line);
      header = true;
      continue;
    }
    auto cells = split(line);
    if (cells.size() != out.columns.size()) {
      fail(ErrorCode::ParseError, "row " + std::to_string(out.rows.size() + 1) + " has " +
                                      std::to_string(cells.size()) + " cells");
    }
    out.rows.push_back(std::move(cells));
  }
  if (!header) fail(ErrorCode::ParseError, "missing header row");
  return out;
}

}  // namespace evomax
