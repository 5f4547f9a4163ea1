#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "core/sampler.hpp"

namespace hierlogit {

struct ParameterSummary {
  std::string name;
  double estimate = 0.0;   // posterior mean
  double std_error = 0.0;  // posterior standard deviation
  double bci_low = 0.0;    // 2.5% quantile
  double bci_high = 0.0;   // 97.5% quantile
  double odds_ratio = 1.0;
  double or_low = 1.0;
  double or_high = 1.0;
  bool significant = false;  // 0 outside [bci_low, bci_high]
};

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws);

// Signed percentage change in the odds: (OR - 1) * 100.
double effect_magnitude(const ParameterSummary& summary);
std::string format_effect_magnitude(double percent);

// Odds ratio rounded the way report tables print it.
std::string format_fixed(double value, int decimals);

struct WaicResult {
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
};

// loglik is draws x observations.
WaicResult waic(const Eigen::MatrixXd& loglik);

struct LooResult {
  double elpd_loo = 0.0;
  double looic = 0.0;
  Eigen::VectorXd elpd_i;    // per-observation contribution
  Eigen::VectorXd pareto_k;  // fitted tail shape; -inf when unsmoothed
  int n_bad_k = 0;           // count of k > 0.7
};

LooResult psis_loo(const Eigen::MatrixXd& loglik);

struct GpdFit {
  double k = 0.0;      // shape
  double sigma = 1.0;  // scale
};

// Profile-likelihood fit over positive exceedances; deterministic.
GpdFit fit_generalized_pareto(std::vector<double> exceedances);

struct ModelFitRow {
  std::string label;
  WaicResult waic;
  LooResult loo;
  std::uint64_t fingerprint = 0;
};

struct ComparisonRow {
  std::string label;
  double waic = 0.0;
  double looic = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // ascending WAIC
  std::string best_by_waic;
  std::string best_by_loo;

  std::string text_table() const;
  std::vector<std::vector<std::string>> csv_rows() const;
};

ComparisonReport compare_models(const std::vector<ModelFitRow>& fits);

double log_sum_exp(const Eigen::VectorXd& values);

}  // namespace hierlogit
