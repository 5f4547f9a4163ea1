#include "core/screening.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "core/csv.hpp"
#include "core/errors.hpp"

namespace hierlogit {

namespace {

constexpr double kSingularR2 = 1.0 - 1e-12;

double column_vif(const Eigen::MatrixXd& design, int k) {
  const int n = static_cast<int>(design.rows());
  const int p = static_cast<int>(design.cols());

  Eigen::MatrixXd predictors(n, p);  // intercept + the other columns
  predictors.col(0).setOnes();
  int out = 1;
  for (int c = 0; c < p; ++c) {
    if (c == k) continue;
    predictors.col(out++) = design.col(c);
  }
  const Eigen::VectorXd target = design.col(k);
  const Eigen::VectorXd centered = target.array() - target.mean();
  const double tss = centered.squaredNorm();
  if (tss <= 0.0) {
    // Constant column: perfectly captured by the intercept.
    return std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd beta =
      predictors.colPivHouseholderQr().solve(target);
  const double rss = (target - predictors * beta).squaredNorm();
  double r2 = 1.0 - rss / tss;
  if (r2 < 0.0) r2 = 0.0;
  if (r2 >= kSingularR2) return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 - r2);
}

}  // namespace

VifReport compute_vif(const Eigen::MatrixXd& design,
                      const std::vector<std::string>& names) {
  const int n = static_cast<int>(design.rows());
  const int p = static_cast<int>(design.cols());
  if (p < 2) {
    throw Error(ErrorCode::UnderdeterminedDesign,
                "VIF needs at least 2 columns");
  }
  if (n <= p) {
    throw Error(ErrorCode::UnderdeterminedDesign,
                "rows (" + std::to_string(n) + ") must exceed columns (" +
                    std::to_string(p) + ")");
  }
  if (static_cast<int>(names.size()) != p) {
    throw Error(ErrorCode::DimensionMismatch, "names vs design columns");
  }
  VifReport report;
  for (int k = 0; k < p; ++k) {
    report.per_column.push_back({names[k], column_vif(design, k)});
  }
  return report;
}

VifReport compute_vif(const CodedDataset& design) {
  return compute_vif(design.fixed_design, design.column_names);
}

VifReport screen(const Eigen::MatrixXd& design,
                 const std::vector<std::string>& names, double threshold) {
  VifReport report = compute_vif(design, names);
  report.threshold = threshold;
  bool pass = true;
  for (const auto& entry : report.per_column) {
    if (std::isinf(entry.vif) || entry.vif > threshold) {
      report.flagged.push_back(entry.column_name);
      pass = false;
    }
  }
  report.pass = pass;
  return report;
}

VifReport screen(const CodedDataset& design, double threshold) {
  return screen(design.fixed_design, design.column_names, threshold);
}

std::string VifReport::text_table() const {
  size_t width = 6;
  for (const auto& entry : per_column) {
    width = std::max(width, entry.column_name.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width) + 2) << "column"
      << std::right << std::setw(10) << "vif"
      << "  flag\n";
  for (const auto& entry : per_column) {
    out << std::left << std::setw(static_cast<int>(width) + 2)
        << entry.column_name << std::right << std::setw(10);
    if (std::isinf(entry.vif)) {
      out << "inf";
    } else {
      out << std::fixed << std::setprecision(3) << entry.vif
          << std::defaultfloat;
    }
    const bool flagged = std::isinf(entry.vif) || entry.vif > threshold;
    out << "  " << (flagged ? "FLAG" : "ok") << "\n";
  }
  out << "threshold " << threshold << ": " << (pass ? "PASS" : "FAIL")
      << "\n";
  return out.str();
}

std::vector<std::vector<std::string>> VifReport::csv_rows() const {
  std::vector<std::vector<std::string>> rows;
  for (const auto& entry : per_column) {
    const bool flagged = std::isinf(entry.vif) || entry.vif > threshold;
    rows.push_back({entry.column_name,
                    std::isinf(entry.vif) ? "inf" : format_double(entry.vif),
                    flagged ? "1" : "0"});
  }
  return rows;
}

}  // namespace hierlogit
