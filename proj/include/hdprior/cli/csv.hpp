#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace hdprior::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or -1.
  int column(const std::string& name) const;
};

/// Comma-separated with a header row; double-quoted fields may contain commas and
/// doubled quotes. Throws DataError on ragged rows.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip decimal form; NaN is written as NA.
std::string format_number(double v);

/// Parses a whole field as a double; false on any trailing characters.
bool parse_number(const std::string& s, double& out);

bool is_missing(const std::string& s);

}  // namespace hdprior::cli
