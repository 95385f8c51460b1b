// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace evomax {

using CsvCell = std::variant<double, std::int64_t, std::string>;

/// Rectangular table written as '#' provenance line, header row, data rows.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<CsvCell>> rows;

  void add_row(std::vector<CsvCell> row);
};

/// Doubles always carry 17 significant digits.
std::string format_double(double value);
std::string format_cell(const CsvCell& cell);

/// "# evomax <version> config=<hash>".
std::string provenance_line(const std::string& config_hash);

void write_csv(std::ostream& out, const CsvTable& table, const std::string& config_hash);
void write_csv_file(const std::string& path, const CsvTable& table, const std::string& config_hash);

struct ParsedCsv {
  std::string provenance;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// Reads back what write_csv produced; throws ParseError on ragged rows.
ParsedCsv read_csv(std::istream& in);

}  // namespace evomax
