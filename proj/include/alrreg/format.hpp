#pragma once

#include <istream>
#include <string>
#include <vector>

namespace alrreg {

/// Six significant digits, "%.6g"; non-finite values print as "NA".
std::string format_number(double x);

/// Header plus string cells. Dot decimal, comma separated, no quoting of
/// separators inside fields beyond stripping surrounding double quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws ParseError naming the column if absent.
  std::size_t column(const std::string& name) const;

  /// Parses cell (row, col) as a double; throws ParseError with the 1-based
  /// data row and the column name.
  double number(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

}  // namespace alrreg
