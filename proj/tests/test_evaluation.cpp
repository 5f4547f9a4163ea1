#include "doctest.h"

#include <cmath>
#include <limits>

#include "core/errors.hpp"
#include "core/evaluation.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

using namespace hierlogit;

namespace {

PosteriorDraws constant_draws(double value, int per_chain = 100) {
  PosteriorDraws draws;
  draws.param_names = {"b[x]"};
  for (int c = 0; c < 2; ++c) {
    ChainResult chain;
    chain.draws = Eigen::MatrixXd::Constant(per_chain, 1, value);
    draws.chains.push_back(std::move(chain));
  }
  return draws;
}

PosteriorDraws normal_draws(double mean, double sd, int per_chain,
                            std::uint64_t seed) {
  PosteriorDraws draws;
  draws.param_names = {"b[x]"};
  Rng rng(seed);
  for (int c = 0; c < 2; ++c) {
    ChainResult chain;
    chain.draws.resize(per_chain, 1);
    for (int i = 0; i < per_chain; ++i) {
      chain.draws(i, 0) = rng.normal(mean, sd);
    }
    draws.chains.push_back(std::move(chain));
  }
  return draws;
}

}  // namespace

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

TEST_CASE("point-mass draws summarize to a degenerate interval") {
  const auto summaries = summarize(constant_draws(-0.23));
  REQUIRE(summaries.size() == 1);
  const ParameterSummary& s = summaries[0];
  CHECK(s.estimate == doctest::Approx(-0.23));
  CHECK(s.std_error == 0.0);
  CHECK(s.bci_low == doctest::Approx(-0.23));
  CHECK(s.bci_high == doctest::Approx(-0.23));
  CHECK(s.odds_ratio == doctest::Approx(std::exp(-0.23)));
  CHECK(s.significant);  // zero sits outside [-0.23, -0.23]
  CHECK(format_fixed(s.odds_ratio, 2) == "0.79");
}

TEST_CASE("odds ratios reproduce the published two-decimal values") {
  CHECK(format_fixed(std::exp(-0.23), 2) == "0.79");
  CHECK(format_fixed(std::exp(0.39), 2) == "1.48");
  CHECK(format_fixed(std::exp(0.35), 2) == "1.42");
  CHECK(format_fixed(std::exp(-1.01), 2) == "0.36");
}

TEST_CASE("summaries need at least 100 retained draws") {
  try {
    summarize(constant_draws(0.1, 40));  // 80 pooled draws
    FAIL("expected InsufficientDraws");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientDraws);
  }
}

TEST_CASE("significance agrees between the 0-in-BCI and 1-in-OR rules") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto draws =
        normal_draws(seed % 3 == 0 ? 0.02 : 0.8, 0.4, 300, seed);
    const auto summaries = summarize(draws);
    const ParameterSummary& s = summaries[0];
    const bool or_rule = s.or_low > 1.0 || s.or_high < 1.0;
    CHECK(s.significant == or_rule);
    CHECK(s.or_low == doctest::Approx(std::exp(s.bci_low)));
    CHECK(s.or_high == doctest::Approx(std::exp(s.bci_high)));
  }
}

TEST_CASE("effect magnitudes carry the sign of OR - 1") {
  ParameterSummary up;
  up.odds_ratio = 1.57;
  CHECK(effect_magnitude(up) == doctest::Approx(57.0));
  CHECK(format_effect_magnitude(effect_magnitude(up)) == "+57%");

  ParameterSummary down;
  down.odds_ratio = 0.36;
  CHECK(effect_magnitude(down) == doctest::Approx(-64.0));
  CHECK(format_effect_magnitude(effect_magnitude(down)) == "-64%");

  ParameterSummary null_effect;
  null_effect.odds_ratio = 1.0;
  CHECK(format_effect_magnitude(effect_magnitude(null_effect)) == "0%");
}

// ---------------------------------------------------------------------------
// WAIC
// ---------------------------------------------------------------------------

TEST_CASE("single observation with zero-variance draws hits the closed form") {
  Eigen::MatrixXd loglik = Eigen::MatrixXd::Constant(50, 1, std::log(0.5));
  const WaicResult result = waic(loglik);
  CHECK(result.lppd == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(result.p_waic == doctest::Approx(0.0));
  CHECK(result.waic == doctest::Approx(1.386294).epsilon(1e-6));
}

TEST_CASE("3x5 matrix matches the brute-force oracle and frozen values") {
  Eigen::MatrixXd loglik(5, 3);
  loglik << -0.5, -1.2, -0.3,
            -0.7, -1.0, -0.45,
            -0.55, -1.4, -0.2,
            -0.6, -0.9, -0.35,
            -0.8, -1.1, -0.25;
  const WaicResult result = waic(loglik);

  // independent brute-force computation, no log-sum-exp shortcuts
  double lppd = 0.0, p_waic = 0.0;
  for (int i = 0; i < 3; ++i) {
    double mean_exp = 0.0, mean = 0.0;
    for (int s = 0; s < 5; ++s) {
      mean_exp += std::exp(loglik(s, i));
      mean += loglik(s, i);
    }
    mean_exp /= 5.0;
    mean /= 5.0;
    lppd += std::log(mean_exp);
    double var = 0.0;
    for (int s = 0; s < 5; ++s) {
      var += (loglik(s, i) - mean) * (loglik(s, i) - mean);
    }
    p_waic += var / 4.0;
  }
  CHECK(result.lppd == doctest::Approx(lppd).epsilon(1e-10));
  CHECK(result.p_waic == doctest::Approx(p_waic).epsilon(1e-10));
  CHECK(result.waic ==
        doctest::Approx(-2.0 * (lppd - p_waic)).epsilon(1e-10));

  // frozen values from the oracle
  CHECK(result.lppd == doctest::Approx(-2.036204422808275).epsilon(1e-12));
  CHECK(result.p_waic == doctest::Approx(0.060750000000000).epsilon(1e-12));
  CHECK(result.waic == doctest::Approx(4.193908845616550).epsilon(1e-12));
}

TEST_CASE("duplicating an observation doubles lppd and p_waic") {
  Eigen::MatrixXd one(6, 1);
  one << -0.3, -0.5, -0.4, -0.6, -0.2, -0.45;
  Eigen::MatrixXd two(6, 2);
  two.col(0) = one.col(0);
  two.col(1) = one.col(0);
  const WaicResult a = waic(one);
  const WaicResult b = waic(two);
  CHECK(b.lppd == doctest::Approx(2.0 * a.lppd).epsilon(1e-12));
  CHECK(b.p_waic == doctest::Approx(2.0 * a.p_waic).epsilon(1e-12));
}

TEST_CASE("waic equals -2 lppd + 2 p_waic with nonnegative penalty") {
  Rng rng(4);
  Eigen::MatrixXd loglik(40, 7);
  for (int s = 0; s < 40; ++s) {
    for (int i = 0; i < 7; ++i) loglik(s, i) = -0.5 + 0.3 * rng.normal();
  }
  const WaicResult result = waic(loglik);
  CHECK(result.p_waic >= 0.0);
  CHECK(result.waic ==
        doctest::Approx(-2.0 * result.lppd + 2.0 * result.p_waic)
            .epsilon(1e-12));
  CHECK(result.waic >= -2.0 * result.lppd);
}

TEST_CASE("adding a constant shifts lppd, leaves p_waic and ranking alone") {
  Rng rng(8);
  Eigen::MatrixXd a(30, 4), b(30, 4);
  for (int s = 0; s < 30; ++s) {
    for (int i = 0; i < 4; ++i) {
      a(s, i) = -0.6 + 0.2 * rng.normal();
      b(s, i) = -0.9 + 0.2 * rng.normal();
    }
  }
  const double c = 0.37;
  const WaicResult base_a = waic(a);
  const WaicResult base_b = waic(b);
  const WaicResult shift_a = waic(a.array() + c);
  const WaicResult shift_b = waic(b.array() + c);
  CHECK(shift_a.lppd == doctest::Approx(base_a.lppd + 4 * c).epsilon(1e-10));
  CHECK(shift_a.p_waic == doctest::Approx(base_a.p_waic).epsilon(1e-9));
  CHECK((base_a.waic < base_b.waic) == (shift_a.waic < shift_b.waic));

  const LooResult loo_a = psis_loo(a);
  const LooResult loo_shift = psis_loo(a.array() + c);
  CHECK(loo_shift.elpd_loo ==
        doctest::Approx(loo_a.elpd_loo + 4 * c).epsilon(1e-9));
}

TEST_CASE("waic needs two draws") {
  Eigen::MatrixXd single(1, 3);
  single.setConstant(-0.5);
  try {
    waic(single);
    FAIL("expected DegenerateDraws");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateDraws);
  }
}

// ---------------------------------------------------------------------------
// Generalized Pareto fit
// ---------------------------------------------------------------------------

TEST_CASE("constant exceedances fit without NaN in the short-tail regime") {
  std::vector<double> constant(12, 0.8);
  const GpdFit fit = fit_generalized_pareto(constant);
  CHECK(std::isfinite(fit.k));
  CHECK(std::isfinite(fit.sigma));
  CHECK(fit.k < -0.5);  // uniform-like limit sits at k = -1 and below
}

TEST_CASE("exponential exceedances recover k near zero") {
  Rng rng(313);
  std::vector<double> sample(10000);
  for (auto& x : sample) x = -std::log(rng.uniform_open());
  const GpdFit fit = fit_generalized_pareto(sample);
  CHECK(std::abs(fit.k) < 0.05);
  CHECK(fit.sigma == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("heavy-tailed exceedances recover k = 0.7 and k = 0.5") {
  Rng rng(707);
  auto gpd_sample = [&](double k, double sigma, int n) {
    std::vector<double> out(n);
    for (auto& x : out) {
      const double u = rng.uniform_open();
      x = sigma * (std::pow(u, -k) - 1.0) / k;
    }
    return out;
  };
  const GpdFit heavy = fit_generalized_pareto(gpd_sample(0.7, 1.0, 4000));
  CHECK(heavy.k == doctest::Approx(0.7).epsilon(0.15));
  CHECK(std::abs(heavy.k - 0.7) < 0.1);
  const GpdFit mid = fit_generalized_pareto(gpd_sample(0.5, 1.0, 4000));
  CHECK(std::abs(mid.k - 0.5) < 0.1);
}

TEST_CASE("too few tail samples are rejected") {
  try {
    fit_generalized_pareto({0.1, 0.2, 0.3, 0.4});
    FAIL("expected TooFewTailSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewTailSamples);
  }
}

// ---------------------------------------------------------------------------
// PSIS-LOO
// ---------------------------------------------------------------------------

TEST_CASE("identical draws make importance weights exact") {
  Eigen::MatrixXd loglik(200, 3);
  for (int s = 0; s < 200; ++s) {
    loglik(s, 0) = -0.4;
    loglik(s, 1) = -1.1;
    loglik(s, 2) = -0.25;
  }
  const LooResult result = psis_loo(loglik);
  CHECK(result.elpd_i(0) == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(result.elpd_i(1) == doctest::Approx(-1.1).epsilon(1e-12));
  CHECK(result.elpd_i(2) == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(result.looic ==
        doctest::Approx(-2.0 * (-0.4 - 1.1 - 0.25)).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    CHECK(result.pareto_k(i) == -std::numeric_limits<double>::infinity());
  }
  CHECK(result.n_bad_k == 0);
}

TEST_CASE("smoothed loo stays close to the raw importance estimate on"
          " well-behaved draws") {
  Rng rng(606);
  const int draws = 2000, n = 10;
  Eigen::MatrixXd loglik(draws, n);
  for (int s = 0; s < draws; ++s) {
    const double theta = 0.5 + 0.05 * rng.normal();
    for (int i = 0; i < n; ++i) {
      const bool y = i % 2 == 0;
      const double p = std::min(std::max(theta, 1e-6), 1.0 - 1e-6);
      loglik(s, i) = y ? std::log(p) : std::log1p(-p);
    }
  }
  const LooResult result = psis_loo(loglik);
  // raw (unsmoothed) importance-sampling estimate per observation
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd lw = -loglik.col(i);
    lw.array() -= lw.maxCoeff();
    const double raw =
        log_sum_exp(lw + loglik.col(i)) - log_sum_exp(lw);
    CHECK(result.elpd_i(i) == doctest::Approx(raw).epsilon(0.02));
    CHECK(result.pareto_k(i) < 0.7);
  }
  CHECK(result.n_bad_k == 0);
}

TEST_CASE("loo needs two draws") {
  Eigen::MatrixXd single(1, 2);
  single.setConstant(-0.3);
  CHECK_THROWS_AS(psis_loo(single), Error);
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

namespace {

ModelFitRow fit_row(const std::string& label, double waic_value,
                    double looic_value, std::uint64_t fingerprint = 7) {
  ModelFitRow row;
  row.label = label;
  row.waic.waic = waic_value;
  row.loo.looic = looic_value;
  row.fingerprint = fingerprint;
  return row;
}

}  // namespace

TEST_CASE("rows sort ascending by WAIC and the published ordering holds") {
  const ComparisonReport report = compare_models(
      {fit_row("fixed", 74.4, 76.5), fit_row("intercept", 64.5, 64.9),
       fit_row("slopes", 62.8, 63.4)});
  CHECK(report.rows[0].label == "slopes");
  CHECK(report.rows[1].label == "intercept");
  CHECK(report.rows[2].label == "fixed");
  CHECK(report.best_by_waic == "slopes");
  CHECK(report.best_by_loo == "slopes");
}

TEST_CASE("ties break by lower LOO, then input order") {
  const ComparisonReport report = compare_models(
      {fit_row("a", 60.0, 61.5), fit_row("b", 60.0, 60.9)});
  CHECK(report.rows[0].label == "b");
  CHECK(report.best_by_waic == "b");

  const ComparisonReport stable = compare_models(
      {fit_row("first", 60.0, 61.0), fit_row("second", 60.0, 61.0)});
  CHECK(stable.best_by_waic == "first");
}

TEST_CASE("comparison guards") {
  try {
    compare_models({fit_row("only", 60.0, 61.0)});
    FAIL("expected InsufficientModels");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientModels);
  }
  try {
    compare_models({fit_row("a", 60.0, 61.0, 1), fit_row("b", 59.0, 60.0, 2)});
    FAIL("expected MismatchedDataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MismatchedDataset);
  }
}
