#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/stats.hpp"

namespace hierlogit {

double log_sum_exp(const Eigen::VectorXd& values) {
  const double max = values.maxCoeff();
  if (!std::isfinite(max)) return max;
  return max + std::log((values.array() - max).exp().sum());
}

// --------------------------------------------------------------------------
// Posterior summaries
// --------------------------------------------------------------------------

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws) {
  if (draws.total_draws() < 100) {
    throw Error(ErrorCode::InsufficientDraws,
                "summaries need >= 100 retained draws, have " +
                    std::to_string(draws.total_draws()));
  }
  std::vector<ParameterSummary> summaries;
  for (int param = 0; param < draws.dim(); ++param) {
    const Eigen::VectorXd pooled = draws.pooled(param);
    ParameterSummary s;
    s.name = draws.param_names[param];
    s.estimate = sample_mean(pooled);
    s.std_error = sample_sd(pooled);
    s.bci_low = quantile_type7(pooled, 0.025);
    s.bci_high = quantile_type7(pooled, 0.975);
    s.odds_ratio = std::exp(s.estimate);
    s.or_low = std::exp(s.bci_low);
    s.or_high = std::exp(s.bci_high);
    s.significant = s.bci_low > 0.0 || s.bci_high < 0.0;
    summaries.push_back(std::move(s));
  }
  return summaries;
}

double effect_magnitude(const ParameterSummary& summary) {
  return (summary.odds_ratio - 1.0) * 100.0;
}

std::string format_effect_magnitude(double percent) {
  const double rounded = std::round(percent);
  if (rounded == 0.0) return "0%";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.0f%%", rounded);
  return buf;
}

std::string format_fixed(double value, int decimals) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

// --------------------------------------------------------------------------
// WAIC
// --------------------------------------------------------------------------

WaicResult waic(const Eigen::MatrixXd& loglik) {
  const auto draws = loglik.rows();
  const auto n = loglik.cols();
  if (draws < 2) {
    throw Error(ErrorCode::DegenerateDraws,
                "WAIC needs >= 2 draws, have " + std::to_string(draws));
  }
  WaicResult result;
  const double log_s = std::log(static_cast<double>(draws));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd column = loglik.col(i);
    result.lppd += log_sum_exp(column) - log_s;
    result.p_waic += sample_variance(column);
  }
  result.waic = -2.0 * (result.lppd - result.p_waic);
  return result;
}

// --------------------------------------------------------------------------
// Generalized Pareto fit (profile likelihood over a fixed grid)
// --------------------------------------------------------------------------

GpdFit fit_generalized_pareto(std::vector<double> exceedances) {
  const int n = static_cast<int>(exceedances.size());
  if (n < 5) {
    throw Error(ErrorCode::TooFewTailSamples,
                "GPD fit needs >= 5 exceedances, have " + std::to_string(n));
  }
  std::sort(exceedances.begin(), exceedances.end());
  if (exceedances.front() <= 0.0) {
    throw Error(ErrorCode::TooFewTailSamples,
                "exceedances must be positive");
  }
  const double x_max = exceedances.back();
  const double x_star = exceedances[static_cast<size_t>(
      std::floor(n / 4.0 + 0.5) - 1)];

  const int grid = 30 + static_cast<int>(std::floor(std::sqrt(n)));
  Eigen::VectorXd theta(grid), profile(grid), shape(grid);
  for (int j = 0; j < grid; ++j) {
    const double jj = static_cast<double>(j + 1);
    theta(j) = 1.0 / x_max +
               (1.0 - std::sqrt(static_cast<double>(grid) / (jj - 0.5))) /
                   (3.0 * x_star);
    double k = 0.0;
    for (double x : exceedances) k += std::log1p(-theta(j) * x);
    k /= static_cast<double>(n);
    shape(j) = k;
    profile(j) =
        static_cast<double>(n) * (std::log(-theta(j) / k) - k - 1.0);
  }
  const double lse = log_sum_exp(profile);
  double theta_hat = 0.0;
  for (int j = 0; j < grid; ++j) {
    theta_hat += theta(j) * std::exp(profile(j) - lse);
  }
  double k_hat = 0.0;
  for (double x : exceedances) k_hat += std::log1p(-theta_hat * x);
  k_hat /= static_cast<double>(n);

  GpdFit fit;
  fit.k = k_hat;
  fit.sigma = theta_hat != 0.0 ? -k_hat / theta_hat
                               : std::accumulate(exceedances.begin(),
                                                 exceedances.end(), 0.0) /
                                     static_cast<double>(n);
  return fit;
}

namespace {

// Quantile of GPD(k, sigma) at probability p.
double gpd_quantile(double p, double k, double sigma) {
  if (std::abs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * (std::pow(1.0 - p, -k) - 1.0) / k;
}

}  // namespace

// --------------------------------------------------------------------------
// PSIS-LOO
// --------------------------------------------------------------------------

LooResult psis_loo(const Eigen::MatrixXd& loglik) {
  const int draws = static_cast<int>(loglik.rows());
  const int n = static_cast<int>(loglik.cols());
  if (draws < 2) {
    throw Error(ErrorCode::DegenerateDraws,
                "PSIS-LOO needs >= 2 draws, have " + std::to_string(draws));
  }
  const int tail_target = static_cast<int>(
      std::min(std::ceil(0.2 * draws), std::ceil(3.0 * std::sqrt(draws))));

  LooResult result;
  result.elpd_i.resize(n);
  result.pareto_k.resize(n);

  std::vector<int> order(draws);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd ll = loglik.col(i);
    // Importance ratios r_s = exp(-ll_s), shifted so the largest is 1;
    // the shift cancels in the normalized weights.
    Eigen::VectorXd log_ratio = -ll;
    const double shift = log_ratio.maxCoeff();
    log_ratio.array() -= shift;

    Eigen::VectorXd log_weight = log_ratio;
    double k_hat = -std::numeric_limits<double>::infinity();

    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return log_ratio(a) < log_ratio(b);
    });
    if (tail_target >= 5 && tail_target < draws) {
      const double cutoff = std::exp(log_ratio(order[draws - tail_target - 1]));
      std::vector<int> tail;
      for (int t = draws - tail_target; t < draws; ++t) {
        if (std::exp(log_ratio(order[t])) > cutoff) tail.push_back(order[t]);
      }
      const int m = static_cast<int>(tail.size());
      if (m >= 5) {
        std::vector<double> exceedances;
        exceedances.reserve(m);
        for (int idx : tail) {
          exceedances.push_back(std::exp(log_ratio(idx)) - cutoff);
        }
        const GpdFit fit = fit_generalized_pareto(exceedances);
        k_hat = fit.k;
        // Replace tail weights by expected order statistics of the fitted
        // tail, then truncate at the raw maximum.
        for (int z = 0; z < m; ++z) {
          const double p = (z + 0.5) / static_cast<double>(m);
          const double smoothed =
              std::min(cutoff + gpd_quantile(p, fit.k, fit.sigma), 1.0);
          log_weight(tail[z]) = std::log(smoothed);
        }
      }
    }

    const double log_norm = log_sum_exp(log_weight);
    result.elpd_i(i) = log_sum_exp(log_weight + ll) - log_norm;
    result.pareto_k(i) = k_hat;
    if (k_hat > 0.7) ++result.n_bad_k;
  }
  result.elpd_loo = result.elpd_i.sum();
  result.looic = -2.0 * result.elpd_loo;
  return result;
}

// --------------------------------------------------------------------------
// Model comparison
// --------------------------------------------------------------------------

ComparisonReport compare_models(const std::vector<ModelFitRow>& fits) {
  if (fits.size() < 2) {
    throw Error(ErrorCode::InsufficientModels,
                "comparison needs >= 2 fits, have " +
                    std::to_string(fits.size()));
  }
  for (const auto& fit : fits) {
    if (fit.fingerprint != fits.front().fingerprint) {
      throw Error(ErrorCode::MismatchedDataset,
                  "fits '" + fits.front().label + "' and '" + fit.label +
                      "' cover different datasets or responses");
    }
  }
  ComparisonReport report;
  for (const auto& fit : fits) {
    report.rows.push_back({fit.label, fit.waic.waic, fit.loo.looic});
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) {
                     if (a.waic != b.waic) return a.waic < b.waic;
                     return a.looic < b.looic;
                   });
  report.best_by_waic = report.rows.front().label;
  const auto best_loo = std::min_element(
      report.rows.begin(), report.rows.end(),
      [](const ComparisonRow& a, const ComparisonRow& b) {
        return a.looic < b.looic;
      });
  report.best_by_loo = best_loo->label;
  return report;
}

std::string ComparisonReport::text_table() const {
  size_t width = 5;
  for (const auto& row : rows) width = std::max(width, row.label.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width) + 2) << "model"
      << std::right << std::setw(10) << "WAIC" << std::setw(10) << "LOO"
      << "\n";
  for (const auto& row : rows) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << row.label
        << std::right << std::setw(10) << std::fixed << std::setprecision(1)
        << row.waic << std::setw(10) << row.looic << std::defaultfloat;
    if (row.label == best_by_waic) out << "  best WAIC";
    if (row.label == best_by_loo) out << "  best LOO";
    out << "\n";
  }
  return out.str();
}

std::vector<std::vector<std::string>> ComparisonReport::csv_rows() const {
  std::vector<std::vector<std::string>> out;
  for (const auto& row : rows) {
    out.push_back({row.label, format_double(row.waic),
                   format_double(row.looic),
                   row.label == best_by_waic ? "1" : "0",
                   row.label == best_by_loo ? "1" : "0"});
  }
  return out;
}

}  // namespace hierlogit
