#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epifield {

/// Header plus rows of a comma-separated file; double-quoted fields may contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws DataError when missing.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Strict numeric parse; throws DataError naming `what`.
double parse_number(const std::string& text, const std::string& what);

/// Shortest text that parses back to the same double.
std::string format_number(double value);

/// Quotes a field when it contains a comma or quote.
std::string csv_field(const std::string& text);

}  // namespace epifield
