#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dlim {

/// Numeric CSV table: comma-separated, header row required, UTF-8, '.'
/// decimal. Empty cells and NA/NaN parse to NaN.
struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  ///< rows x columns

  int column_index(const std::string& name) const;  ///< -1 if absent
  Eigen::VectorXd column(const std::string& name) const;  ///< throws if absent
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

}  // namespace dlim
