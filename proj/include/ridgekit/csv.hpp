#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ridgekit/decomp.hpp"
#include "ridgekit/error.hpp"

namespace ridgekit {

/// Rectangular numeric table with a header row. Empty cells and the literal
/// NA are missing values, stored as NaN with the mask set.
struct TabularFile {
  std::vector<std::string> header;
  Matrix values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  bool has_missing() const { return missing.cast<int>().sum() > 0; }

  Index column_index(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<Index>(j);
    throw InvalidInputError("unknown column '" + name + "'");
  }
};

/// Shortest round-trip decimal rendering of a double; parsing the output
/// recovers the exact bits, which is what makes emitted CSVs byte-stable and
/// re-readable without loss.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace csv_detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace csv_detail

inline TabularFile read_csv(std::istream& in, const std::string& origin = "") {
  const std::string where = origin.empty() ? "csv" : origin;
  std::string line;
  if (!std::getline(in, line))
    throw InvalidInputError(where + ": empty input, header required");
  TabularFile out;
  for (const auto& cell : csv_detail::split_line(line))
    out.header.push_back(csv_detail::trim(cell));
  const Index cols = static_cast<Index>(out.header.size());
  if (cols == 0) throw InvalidInputError(where + ": empty header");

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> miss;
  Index lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv_detail::trim(line).empty()) continue;
    const auto cells = csv_detail::split_line(line);
    if (static_cast<Index>(cells.size()) != cols)
      throw InvalidInputError(where + ": row " + std::to_string(lineno) +
                              " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(cols));
    std::vector<double> row(cols);
    std::vector<bool> rowmiss(cols, false);
    for (Index j = 0; j < cols; ++j) {
      const std::string cell = csv_detail::trim(cells[j]);
      if (cell.empty() || cell == "NA") {
        row[j] = std::numeric_limits<double>::quiet_NaN();
        rowmiss[j] = true;
        continue;
      }
      double v = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last)
        throw InvalidInputError(where + ": row " + std::to_string(lineno) +
                                ", column '" + out.header[j] +
                                "': cannot parse '" + cell + "' as a number");
      row[j] = v;
    }
    rows.push_back(std::move(row));
    miss.push_back(std::move(rowmiss));
  }

  out.values.resize(static_cast<Index>(rows.size()), cols);
  out.missing.resize(static_cast<Index>(rows.size()), cols);
  for (Index i = 0; i < out.values.rows(); ++i)
    for (Index j = 0; j < cols; ++j) {
      out.values(i, j) = rows[i][j];
      out.missing(i, j) = miss[i][j];
    }
  return out;
}

inline TabularFile read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open '" + path + "'");
  return read_csv(in, path);
}

inline void write_csv(std::ostream& out, const TabularFile& table) {
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << ',';
    out << table.header[j];
  }
  out << '\n';
  for (Index i = 0; i < table.rows(); ++i) {
    for (Index j = 0; j < table.cols(); ++j) {
      if (j) out << ',';
      if (table.missing(i, j))
        out << "NA";
      else
        out << format_double(table.values(i, j));
    }
    out << '\n';
  }
}

}  // namespace ridgekit
