#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace backbone::csv {

struct Table {
  Eigen::MatrixXd values;  // rows x columns
  std::vector<std::string> column_names;  // empty when the file has no header
  bool has_header = false;
};

// Comma-separated numeric table. A header row is auto-detected: if any cell of
// the first line fails to parse as a number, the line is taken as column names.
Table read_csv(std::istream& in);
Table read_csv_file(const std::string& path);

}  // namespace backbone::csv
