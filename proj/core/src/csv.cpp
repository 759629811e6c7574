#include "dlim/csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "dlim/error.hpp"

namespace dlim {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace and stray CR
    size_t a = cell.find_first_not_of(" \t\r");
    size_t b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
         s == "NAN";
}

double parse_cell(const std::string& s, const std::string& path, size_t lineno,
                  size_t col) {
  if (is_missing(s)) return std::numeric_limits<double>::quiet_NaN();
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw SpecError(path + ":" + std::to_string(lineno) + ": column " +
                    std::to_string(col + 1) + ": cannot parse '" + s +
                    "' as a number");
  }
  return v;
}

}  // namespace

int CsvTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

Eigen::VectorXd CsvTable::column(const std::string& name) const {
  int j = column_index(name);
  if (j < 0) throw SpecError("no column named '" + name + "' in data");
  return values.col(j);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open file: " + path);

  CsvTable table;
  std::string line;
  size_t lineno = 0;

  // header
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    table.columns = split_line(line);
    break;
  }
  if (table.columns.empty()) throw SpecError(path + ": empty file");
  const size_t ncol = table.columns.size();

  std::vector<double> data;
  size_t nrow = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != ncol) {
      throw SpecError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(ncol) + " fields, found " +
                      std::to_string(cells.size()));
    }
    for (size_t j = 0; j < ncol; ++j)
      data.push_back(parse_cell(cells[j], path, lineno, j));
    ++nrow;
  }
  if (nrow == 0) throw SpecError(path + ": no data rows");

  table.values.resize(nrow, ncol);
  for (size_t i = 0; i < nrow; ++i)
    for (size_t j = 0; j < ncol; ++j)
      table.values(i, j) = data[i * ncol + j];
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  if (header.size() != static_cast<size_t>(values.cols()))
    throw SpecError("write_csv: header size does not match column count");
  std::ofstream out(path);
  if (!out) throw SpecError("cannot open file for writing: " + path);
  out.precision(12);
  for (size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      double v = values(i, j);
      if (std::isnan(v))
        out << "NA";
      else
        out << v;
    }
    out << '\n';
  }
  if (!out) throw SpecError("error writing file: " + path);
}

}  // namespace dlim
