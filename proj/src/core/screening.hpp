#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace hierlogit {

struct VifEntry {
  std::string column_name;
  double vif = 1.0;  // +infinity marks exact or near-exact collinearity
};

struct VifReport {
  std::vector<VifEntry> per_column;
  double threshold = 10.0;
  std::vector<std::string> flagged;  // vif > threshold
  bool pass = false;

  std::string text_table() const;
  std::vector<std::vector<std::string>> csv_rows() const;
};

// vif_k = 1 / (1 - R^2_k) from least squares of column k on the remaining
// columns plus an intercept. Requires rows > columns and >= 2 columns.
VifReport compute_vif(const Eigen::MatrixXd& design,
                      const std::vector<std::string>& names);

VifReport compute_vif(const CodedDataset& design);

VifReport screen(const Eigen::MatrixXd& design,
                 const std::vector<std::string>& names, double threshold);

VifReport screen(const CodedDataset& design, double threshold);

}  // namespace hierlogit
