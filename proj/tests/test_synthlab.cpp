#include "doctest.h"

#include <cmath>

#include "core/errors.hpp"
#include "core/stats.hpp"
#include "core/synthlab.hpp"

using namespace hierlogit;

namespace {

TruthScenario base_scenario() {
  TruthScenario scenario;
  scenario.label = "unit";
  scenario.structure = ModelStructure::RandomIntercept;
  scenario.num_fixed = 2;
  scenario.groups = 8;
  scenario.n_per_group = 25;
  scenario.seed = 11;
  scenario.gamma00 = 0.2;
  scenario.gamma = {0.5, -0.5};
  scenario.sigma0 = 0.5;
  return scenario;
}

}  // namespace

TEST_CASE("identical scenarios generate identical datasets") {
  const SyntheticData a = generate_synthetic(base_scenario());
  const SyntheticData b = generate_synthetic(base_scenario());
  CHECK(a.data.response == b.data.response);
  CHECK(a.data.fixed_design == b.data.fixed_design);
  CHECK(a.true_mu0 == b.true_mu0);

  auto reseeded = base_scenario();
  reseeded.seed = 12;
  const SyntheticData c = generate_synthetic(reseeded);
  CHECK(a.data.response != c.data.response);
}

TEST_CASE("symmetric scenario approaches a one-half response rate") {
  TruthScenario scenario;
  scenario.label = "sym";
  scenario.structure = ModelStructure::FixedOnly;
  scenario.num_fixed = 0;
  scenario.groups = 10;
  scenario.n_per_group = 1000;
  scenario.seed = 5;
  scenario.gamma00 = 0.0;
  const SyntheticData synthetic = generate_synthetic(scenario);
  CHECK(synthetic.data.response.mean() == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("extreme intercepts are capped and saturate the response") {
  TruthScenario scenario;
  scenario.label = "sat";
  scenario.structure = ModelStructure::FixedOnly;
  scenario.num_fixed = 0;
  scenario.groups = 2;
  scenario.n_per_group = 200;
  scenario.seed = 6;
  scenario.gamma00 = 1e9;  // capped at 20 on the logit scale
  const SyntheticData synthetic = generate_synthetic(scenario);
  CHECK(synthetic.data.response.minCoeff() == 1.0);
}

TEST_CASE("group intercept deviations carry the configured spread") {
  TruthScenario scenario = base_scenario();
  scenario.groups = 40;
  scenario.n_per_group = 5;
  scenario.sigma0 = 0.5;
  scenario.seed = 77;
  const SyntheticData synthetic = generate_synthetic(scenario);
  const double sd = sample_sd(synthetic.true_mu0);
  CHECK(sd == doctest::Approx(0.5).epsilon(0.20));
}

TEST_CASE("scenario json parses and validates") {
  const TruthScenario scenario = parse_scenario(R"({
    "label": "cfg",
    "structure": "random_intercept_and_slopes",
    "num_fixed": 2, "groups": 12, "n_per_group": 40, "seed": 7,
    "gamma00": 0.3, "gamma": [0.8, -0.5],
    "sigma0": 0.5, "slope_terms": ["x1"], "slope_sigmas": [0.5]
  })");
  CHECK(scenario.groups == 12);
  CHECK(scenario.slope_terms == std::vector<std::string>{"x1"});

  CHECK_THROWS_AS(parse_scenario(R"({"groups": 1})"), Error);
  CHECK_THROWS_AS(parse_scenario(R"({
    "structure": "random_intercept", "num_fixed": 1, "groups": 4,
    "n_per_group": 5, "gamma": [0.1], "sigma0": 0.0
  })"),
                  Error);
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

TEST_CASE("with no data the grid posterior is the prior") {
  const CodedDataset data = intercept_only_dataset({});
  PriorConfig prior;
  prior.coef_variance = 4.0;  // keep the grid a practical size
  const GridPosterior grid =
      grid_posterior_oracle(data, prior, -20.0, 20.0, 0.01);
  CHECK(grid.mean == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(grid.sd == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("all-positive observations pull the posterior mean up") {
  const CodedDataset data = intercept_only_dataset({1, 1, 1, 1});
  PriorConfig prior;  // the weak default
  const GridPosterior grid =
      grid_posterior_oracle(data, prior, -30.0, 30.0, 0.005);
  CHECK(grid.mean > 0.5);
  CHECK(std::isfinite(grid.sd));
}

TEST_CASE("normalized density integrates to one") {
  const CodedDataset data = intercept_only_dataset({1, 0, 1});
  PriorConfig prior;
  prior.coef_variance = 9.0;
  const GridPosterior grid =
      grid_posterior_oracle(data, prior, -25.0, 25.0, 0.01);
  // the trapezoid normalization also pins the plain Riemann sum here
  // because the endpoint densities are vanishingly small
  CHECK(grid.normalized_density.sum() * grid.step ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a grid that clips the posterior is rejected") {
  const CodedDataset data = intercept_only_dataset({1, 0});
  PriorConfig prior;
  try {
    grid_posterior_oracle(data, prior, -1.0, 1.0, 0.01);
    FAIL("expected RangeTooNarrow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RangeTooNarrow);
  }
}

TEST_CASE("the oracle rejects designs with fixed columns") {
  CodedDataset data = intercept_only_dataset({1, 0, 1});
  data.fixed_design.resize(3, 1);
  data.fixed_design << 1, 0, 1;
  data.column_names = {"x1"};
  CHECK_THROWS_AS(grid_posterior_oracle(data, PriorConfig{}, -5, 5, 0.1),
                  Error);
}
