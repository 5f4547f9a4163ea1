#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace hierlogit {

// Type-7 quantile: linear interpolation of order statistics, the
// deterministic convention used for every interval in the toolkit.
inline double quantile_type7(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n == 0) return std::nan("");
  if (n == 1) return values[0];
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= n) return values[n - 1];
  return values[lo] + (h - std::floor(h)) * (values[lo + 1] - values[lo]);
}

inline double quantile_type7(const Eigen::VectorXd& values, double p) {
  return quantile_type7(
      std::vector<double>(values.data(), values.data() + values.size()), p);
}

inline double sample_mean(const Eigen::VectorXd& values) {
  return values.size() ? values.mean() : std::nan("");
}

// Divisor n-1; exactly 0 for a constant sample.
inline double sample_variance(const Eigen::VectorXd& values) {
  const auto n = values.size();
  if (n < 2) return 0.0;
  if (values.minCoeff() == values.maxCoeff()) return 0.0;
  const double mean = values.mean();
  return (values.array() - mean).square().sum() /
         static_cast<double>(n - 1);
}

inline double sample_sd(const Eigen::VectorXd& values) {
  return std::sqrt(sample_variance(values));
}

// Effective sample size by the initial-positive-sequence rule: sum paired
// autocorrelations until a pair goes negative.
inline double effective_sample_size(const Eigen::VectorXd& values) {
  const auto n = values.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = values.mean();
  const Eigen::ArrayXd centered = values.array() - mean;
  const double c0 = centered.square().sum() / static_cast<double>(n);
  if (c0 <= 0.0) return static_cast<double>(n);
  auto rho = [&](long t) {
    double c = 0.0;
    for (long i = 0; i + t < n; ++i) c += centered(i) * centered(i + t);
    return c / static_cast<double>(n) / c0;
  };
  double tau = 1.0;
  for (long t = 1; t + 1 < n; t += 2) {
    const double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  return std::max(1.0, static_cast<double>(n) / tau);
}

}  // namespace hierlogit
