#include "doctest.h"

#include <cmath>
#include <set>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/sampler.hpp"
#include "core/stats.hpp"
#include "core/synthlab.hpp"

using namespace hierlogit;

namespace {

class StdNormalTarget : public McmcTarget {
 public:
  int dim() const override { return 1; }
  double log_density(const Eigen::VectorXd& u) const override {
    return -0.5 * u(0) * u(0);
  }
  std::vector<std::string> parameter_names() const override { return {"z"}; }
};

McmcConfig quick_config(int chains, int burnin, int keep,
                        std::uint64_t seed) {
  McmcConfig config;
  config.n_chains = chains;
  config.n_burnin = burnin;
  config.n_keep = keep;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("defaults reproduce the documented totals") {
  const McmcConfig config;
  CHECK(config.n_chains == 2);
  CHECK(config.n_burnin == 5000);
  CHECK(config.n_keep == 10000);
  CHECK(config.target_accept == doctest::Approx(0.35));
}

TEST_CASE("standard-normal harness recovers the first two moments") {
  StdNormalTarget target;
  const ChainResult chain =
      run_chain(target, quick_config(1, 2000, 10000, 42), 42);
  const Eigen::VectorXd draws = chain.draws.col(0);
  CHECK(std::abs(sample_mean(draws)) < 0.03);
  CHECK(std::abs(sample_variance(draws) - 1.0) < 0.05);
  CHECK_FALSE(chain.stuck);
  // healthy acceptance after adaptation toward 0.35
  CHECK(chain.accept_rate[0] > 0.15);
  CHECK(chain.accept_rate[0] < 0.6);
}

TEST_CASE("zero-data model samples the coefficient prior") {
  const CodedDataset data = intercept_only_dataset({});
  HierarchicalModelSpec spec;
  spec.response_name = "y";
  spec.structure = ModelStructure::FixedOnly;
  const PosteriorDraws draws =
      run_mcmc(spec, data, quick_config(2, 2000, 10000, 7));
  const Eigen::VectorXd pooled = draws.pooled(0);
  const double var = sample_variance(pooled);
  CHECK(var == doctest::Approx(1000.0).epsilon(0.10));
  CHECK(std::abs(sample_mean(pooled)) < 3.0);
}

TEST_CASE("same seed gives bit-identical draws, chains differ") {
  StdNormalTarget target;
  const auto config = quick_config(2, 200, 500, 99);
  const PosteriorDraws a = run_mcmc(target, config);
  const PosteriorDraws b = run_mcmc(target, config);
  REQUIRE(a.n_chains() == 2);
  CHECK(a.chains[0].draws == b.chains[0].draws);
  CHECK(a.chains[1].draws == b.chains[1].draws);
  CHECK(a.chains[0].draws != a.chains[1].draws);

  auto reseeded = config;
  reseeded.seed = 100;
  const PosteriorDraws c = run_mcmc(target, reseeded);
  CHECK(a.chains[0].draws != c.chains[0].draws);
}

TEST_CASE("parallel chains reproduce the sequential result") {
  StdNormalTarget target;
  auto config = quick_config(4, 200, 500, 123);
  const PosteriorDraws sequential = run_mcmc(target, config);
  config.jobs = 4;
  const PosteriorDraws parallel = run_mcmc(target, config);
  for (int c = 0; c < 4; ++c) {
    CHECK(sequential.chains[c].draws == parallel.chains[c].draws);
  }
}

TEST_CASE("per-chain means of a common target agree within noise") {
  StdNormalTarget target;
  const PosteriorDraws draws =
      run_mcmc(target, quick_config(4, 2000, 5000, 5));
  for (const auto& chain : draws.chains) {
    CHECK(std::abs(sample_mean(chain.draws.col(0))) < 0.1);
  }
}

TEST_CASE("model target exposes gamma, group, and variance blocks") {
  TruthScenario scenario;
  scenario.structure = ModelStructure::RandomInterceptAndSlopes;
  scenario.num_fixed = 2;
  scenario.groups = 3;
  scenario.n_per_group = 10;
  scenario.seed = 1;
  scenario.gamma = {0.3, -0.3};
  scenario.sigma0 = 0.5;
  scenario.slope_terms = {"x2"};
  scenario.slope_sigmas = {0.5};
  const SyntheticData synthetic = generate_synthetic(scenario);
  ModelTarget target(scenario.to_model_spec(), synthetic.data);
  const auto blocks = target.blocks();
  // gamma, one per group, variances, plus the joint whole-vector block
  REQUIRE(blocks.size() == 1 + 3 + 1 + 1);
  CHECK(blocks.front().name == "gamma");
  CHECK(blocks.front().indices.size() == 3);  // intercept + 2 coefficients
  CHECK(blocks[1].indices.size() == 2);       // intercept + slope deviation
  CHECK(blocks[4].name == "variances");
  CHECK(blocks[4].indices.size() == 2);
  CHECK(blocks.back().name == "joint");
  CHECK(static_cast<int>(blocks.back().indices.size()) == target.dim());

  // names: variances reported on the sd scale
  const auto names = target.parameter_names();
  int sd_names = 0;
  for (const auto& name : names) sd_names += name.rfind("sd[", 0) == 0;
  CHECK(sd_names == 2);
}

TEST_CASE("proposal scales are frozen over every kept iteration") {
  TruthScenario scenario;
  scenario.structure = ModelStructure::RandomIntercept;
  scenario.num_fixed = 1;
  scenario.groups = 4;
  scenario.n_per_group = 10;
  scenario.seed = 3;
  scenario.gamma = {0.4};
  scenario.sigma0 = 0.4;
  const SyntheticData synthetic = generate_synthetic(scenario);
  ModelTarget target(scenario.to_model_spec(), synthetic.data);
  const ChainResult chain =
      run_chain(target, quick_config(1, 500, 400, 11), 11);
  for (int b = 0; b < chain.kept_scales.cols(); ++b) {
    const double first = chain.kept_scales(0, b);
    CHECK((chain.kept_scales.col(b).array() == first).all());
  }
  // kept log densities are finite
  CHECK(chain.log_density.allFinite());
}

TEST_CASE("a hopeless proposal scale is reported as stuck, not fatal") {
  class NarrowTarget : public McmcTarget {
   public:
    int dim() const override { return 1; }
    double log_density(const Eigen::VectorXd& u) const override {
      return -0.5 * u(0) * u(0) * 1e12;  // sd = 1e-6 against scale 2.38
    }
  };
  NarrowTarget target;
  const ChainResult chain =
      run_chain(target, quick_config(1, 0, 2000, 17), 17);
  CHECK(chain.stuck);
}

TEST_CASE("non-finite initial point is an error") {
  class BadTarget : public McmcTarget {
   public:
    int dim() const override { return 1; }
    double log_density(const Eigen::VectorXd&) const override {
      return std::nan("");
    }
  };
  BadTarget target;
  try {
    run_chain(target, quick_config(1, 10, 10, 1), 1);
    FAIL("expected NonFiniteLogPosterior");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLogPosterior);
  }
}

// ---------------------------------------------------------------------------
// Interval-ratio diagnostic
// ---------------------------------------------------------------------------

namespace {

PosteriorDraws draws_from_columns(const Eigen::MatrixXd& chain1,
                                  const Eigen::MatrixXd& chain2) {
  PosteriorDraws draws;
  draws.param_names = {"p0"};
  ChainResult a, b;
  a.draws = chain1;
  b.draws = chain2;
  draws.chains = {a, b};
  return draws;
}

}  // namespace

TEST_CASE("identical chains give ratio exactly 1") {
  Eigen::MatrixXd values(100, 1);
  for (int i = 0; i < 100; ++i) values(i, 0) = std::sin(i * 0.37) * 2.0;
  const auto draws = draws_from_columns(values, values);
  const ConvergenceReport report = interval_ratio_diagnostic(draws);
  CHECK(report.per_parameter[0].interval_ratio == 1.0);
  CHECK(report.overall_pass);
}

TEST_CASE("chains from one distribution pass, offset chains fail") {
  Rng rng(77);
  Eigen::MatrixXd a(4000, 1), b(4000, 1);
  for (int i = 0; i < 4000; ++i) {
    a(i, 0) = rng.normal();
    b(i, 0) = rng.normal();
  }
  const ConvergenceReport good =
      interval_ratio_diagnostic(draws_from_columns(a, b));
  CHECK(good.overall_pass);
  CHECK(good.per_parameter[0].interval_ratio ==
        doctest::Approx(1.0).epsilon(0.05));

  Eigen::MatrixXd shifted = b.array() + 50.0;
  const ConvergenceReport bad =
      interval_ratio_diagnostic(draws_from_columns(a, shifted));
  CHECK_FALSE(bad.overall_pass);
  CHECK(bad.per_parameter[0].interval_ratio > 5.0);
}

TEST_CASE("diagnostic needs two chains and ten draws each") {
  Eigen::MatrixXd tiny(1, 1);
  tiny(0, 0) = 0.0;
  PosteriorDraws single;
  single.param_names = {"p0"};
  ChainResult only;
  only.draws = tiny;
  single.chains = {only};
  CHECK_THROWS_AS(interval_ratio_diagnostic(single), Error);

  const auto draws = draws_from_columns(tiny, tiny);
  try {
    interval_ratio_diagnostic(draws);
    FAIL("expected InsufficientDraws");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientDraws);
  }
}

TEST_CASE("pointwise log likelihood is recorded for every kept draw") {
  TruthScenario scenario;
  scenario.structure = ModelStructure::RandomIntercept;
  scenario.num_fixed = 1;
  scenario.groups = 3;
  scenario.n_per_group = 8;
  scenario.seed = 21;
  scenario.gamma = {0.2};
  scenario.sigma0 = 0.3;
  const SyntheticData synthetic = generate_synthetic(scenario);
  const PosteriorDraws draws = run_mcmc(scenario.to_model_spec(),
                                        synthetic.data,
                                        quick_config(2, 200, 300, 9));
  const Eigen::MatrixXd loglik = draws.stacked_loglik();
  CHECK(loglik.rows() == 600);
  CHECK(loglik.cols() == synthetic.data.n());
  CHECK(loglik.allFinite());
  CHECK(draws.total_draws() == 600);
}
