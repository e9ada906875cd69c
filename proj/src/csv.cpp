#include "backbone/csv.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "backbone/errors.hpp"

namespace backbone::csv {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

Table read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  Table table;
  std::string line;
  bool first = true;
  std::size_t width = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    std::vector<double> parsed(cells.size());
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!parse_number(cells[c], parsed[c])) {
        numeric = false;
        break;
      }
    if (first) {
      first = false;
      width = cells.size();
      if (!numeric) {
        table.has_header = true;
        table.column_names = std::move(cells);
        continue;
      }
    }
    if (!numeric)
      throw InvalidInputError("csv: non-numeric cell on line " + std::to_string(line_no));
    if (cells.size() != width)
      throw InvalidInputError("csv: line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(width));
    rows.push_back(std::move(parsed));
  }
  if (rows.empty()) throw InvalidInputError("csv: no data rows");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

Table read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("csv: cannot open " + path);
  return read_csv(in);
}

}  // namespace backbone::csv
