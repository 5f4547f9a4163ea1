#include "doctest.h"

#include <cmath>
#include <vector>

#include "core/errors.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/synthlab.hpp"

using namespace hierlogit;

namespace {

// Two groups, binary covariates, constructed by hand.
CodedDataset small_dataset() {
  CodedDataset data;
  data.response.resize(6);
  data.response << 1, 0, 1, 1, 0, 1;
  data.fixed_design.resize(6, 2);
  data.fixed_design << 1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 0, 1;
  data.group_index_l2 = {0, 0, 0, 1, 1, 1};
  data.group_labels_l2 = {"gA", "gB"};
  data.level2_design.resize(2, 0);
  data.column_names = {"x1", "x2"};
  data.response_name = "y";
  data.mode_label = "synthetic";
  return data;
}

HierarchicalModelSpec small_spec(ModelStructure structure) {
  HierarchicalModelSpec spec;
  spec.response_name = "y";
  spec.fixed_terms = {"x1", "x2"};
  spec.structure = structure;
  if (structure == ModelStructure::RandomInterceptAndSlopes) {
    spec.random_slope_terms = {"x1"};
  }
  return spec;
}

}  // namespace

TEST_CASE("all-zero parameters give eta 0 and pi one half") {
  const CodedDataset data = small_dataset();
  const auto spec = small_spec(ModelStructure::RandomIntercept);
  const auto layout = ParameterLayout::make(spec, data);
  auto params = ParameterVector::zeros(layout);
  const Prediction prediction = linear_predictor(spec, params, data);
  for (int i = 0; i < data.n(); ++i) {
    CHECK(prediction.eta(i) == 0.0);
    CHECK(prediction.pi(i) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("intercept-only prediction matches the closed form") {
  const CodedDataset data = small_dataset();
  const auto spec = small_spec(ModelStructure::RandomIntercept);
  const auto layout = ParameterLayout::make(spec, data);
  auto params = ParameterVector::zeros(layout);
  params.values(layout.gamma00()) = 0.39;
  const double expected = std::exp(0.39) / (1.0 + std::exp(0.39));
  const Prediction prediction = linear_predictor(spec, params, data);
  for (int i = 0; i < data.n(); ++i) {
    CHECK(prediction.pi(i) == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("fixed-only predictions ignore the group index") {
  CodedDataset data = small_dataset();
  const auto spec = small_spec(ModelStructure::FixedOnly);
  const auto layout = ParameterLayout::make(spec, data);
  CHECK(layout.dim() == 3);  // intercept + two coefficients
  auto params = ParameterVector::zeros(layout);
  params.values(layout.gamma00()) = 0.4;
  params.values(layout.gamma_p0(0)) = -0.7;
  params.values(layout.gamma_p0(1)) = 0.2;
  const Prediction base = linear_predictor(spec, params, data);
  // swap group memberships; eta must not move
  for (auto& g : data.group_index_l2) g = 1 - g;
  const Prediction swapped = linear_predictor(spec, params, data);
  CHECK(base.eta == swapped.eta);
}

TEST_CASE("log likelihood matches ln(1/2) and the enumeration oracle") {
  Prediction prediction;
  prediction.eta.resize(1);
  prediction.pi.resize(1);
  prediction.eta(0) = 0.0;
  prediction.pi(0) = 0.5;
  Eigen::VectorXd y1(1), y0(1);
  y1 << 1.0;
  y0 << 0.0;
  CHECK(log_likelihood(prediction, y1).total ==
        doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(log_likelihood(prediction, y0).total ==
        doctest::Approx(std::log(0.5)).epsilon(1e-15));

  // 4-row toy dataset vs a brute-force product of Bernoulli masses
  Eigen::VectorXd eta(4), y(4);
  eta << 0.3, -1.2, 2.0, -0.4;
  y << 1, 0, 1, 1;
  Prediction toy;
  toy.eta = eta;
  toy.pi.resize(4);
  double product = 1.0;
  for (int i = 0; i < 4; ++i) {
    const double pi = 1.0 / (1.0 + std::exp(-eta(i)));
    toy.pi(i) = pi;
    product *= y(i) > 0.5 ? pi : 1.0 - pi;
  }
  const LogLikelihood ll = log_likelihood(toy, y);
  CHECK(ll.total == doctest::Approx(std::log(product)).epsilon(1e-12));
  CHECK(ll.pointwise.sum() == doctest::Approx(ll.total).epsilon(1e-15));
}

TEST_CASE("non-binary responses are rejected") {
  Prediction prediction;
  prediction.eta.resize(1);
  prediction.pi.resize(1);
  prediction.eta(0) = 0.0;
  prediction.pi(0) = 0.5;
  Eigen::VectorXd y(1);
  y << 0.3;
  try {
    log_likelihood(prediction, y);
    FAIL("expected NonBinaryResponse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonBinaryResponse);
  }
}

TEST_CASE("log prior matches a hand-computed density sum") {
  const CodedDataset data = small_dataset();
  const auto spec = small_spec(ModelStructure::RandomInterceptAndSlopes);
  const auto layout = ParameterLayout::make(spec, data);
  auto params = ParameterVector::zeros(layout);

  // independent closed forms, written out rather than shared with the
  // implementation
  auto normal_lp = [](double x, double mean, double var) {
    return -0.5 * std::log(2.0 * M_PI * var) -
           (x - mean) * (x - mean) / (2.0 * var);
  };
  auto invgamma_lp = [](double x, double a, double b) {
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) -
           b / x;
  };
  // zeros(): gammas 0, random effects 0, variances 1
  const int gammas = layout.num_gammas();
  double expected = gammas * normal_lp(0.0, 0.0, 1000.0);
  expected += invgamma_lp(1.0, 0.001, 0.001);       // intercept variance
  expected += 2 * normal_lp(0.0, 0.0, 1.0);         // two group intercepts
  expected += invgamma_lp(1.0, 0.001, 0.001);       // slope variance
  expected += 2 * normal_lp(0.0, 0.0, 1.0);         // two group slopes
  CHECK(log_prior(spec, params) == doctest::Approx(expected).epsilon(1e-12));

  // prior mode of the variance stays finite
  params.values(layout.sigma0_sq()) = 0.001 / (0.001 + 1.0);
  CHECK(std::isfinite(log_prior(spec, params)));

  // moving a coefficient away from zero strictly lowers the prior
  params = ParameterVector::zeros(layout);
  const double at_zero = log_prior(spec, params);
  params.values(layout.gamma_p0(0)) = 2.0;
  const double at_two = log_prior(spec, params);
  CHECK(at_two < at_zero);
  params.values(layout.gamma_p0(0)) = 4.0;
  CHECK(log_prior(spec, params) < at_two);
}

TEST_CASE("non-positive variances are rejected") {
  const CodedDataset data = small_dataset();
  const auto spec = small_spec(ModelStructure::RandomIntercept);
  const auto layout = ParameterLayout::make(spec, data);
  auto params = ParameterVector::zeros(layout);
  params.values(layout.sigma0_sq()) = 0.0;
  try {
    log_prior(spec, params);
    FAIL("expected NonPositiveVariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveVariance);
  }
  params.values(layout.sigma0_sq()) = -1.0;
  CHECK_THROWS_AS(log_prior(spec, params), Error);
}

TEST_CASE("log posterior is the sum of its parts and tracks the likelihood") {
  const CodedDataset data = small_dataset();
  const auto spec = small_spec(ModelStructure::RandomIntercept);
  const auto layout = ParameterLayout::make(spec, data);
  auto params = ParameterVector::zeros(layout);
  params.values(layout.gamma00()) = 0.25;
  params.values(layout.mu0(0)) = 0.1;
  params.values(layout.mu0(1)) = -0.1;

  const Prediction prediction = linear_predictor(spec, params, data);
  const double expected =
      log_likelihood(prediction, data.response).total + log_prior(spec, params);
  CHECK(log_posterior(spec, params, data) ==
        doctest::Approx(expected).epsilon(1e-14));

  // symmetric prior, asymmetric data: the better-fitting sign wins
  std::vector<int> ys = {1, 1, 1, 0};
  const CodedDataset toy = intercept_only_dataset(ys);
  HierarchicalModelSpec flat;
  flat.response_name = "y";
  flat.structure = ModelStructure::FixedOnly;
  const auto toy_layout = ParameterLayout::make(flat, toy);
  auto up = ParameterVector::zeros(toy_layout);
  auto down = ParameterVector::zeros(toy_layout);
  up.values(0) = 0.5;
  down.values(0) = -0.5;
  CHECK(log_posterior(flat, up, toy) > log_posterior(flat, down, toy));
}

TEST_CASE("permuting groups and their effects leaves the posterior fixed") {
  const CodedDataset data = small_dataset();
  const auto spec = small_spec(ModelStructure::RandomIntercept);
  const auto layout = ParameterLayout::make(spec, data);
  auto params = ParameterVector::zeros(layout);
  params.values(layout.gamma00()) = 0.3;
  params.values(layout.mu0(0)) = 0.8;
  params.values(layout.mu0(1)) = -0.2;
  const double base = log_posterior(spec, params, data);

  CodedDataset permuted = data;
  for (auto& g : permuted.group_index_l2) g = 1 - g;
  std::swap(permuted.group_labels_l2[0], permuted.group_labels_l2[1]);
  auto swapped = params;
  swapped.values(layout.mu0(0)) = params.values(layout.mu0(1));
  swapped.values(layout.mu0(1)) = params.values(layout.mu0(0));
  CHECK(log_posterior(spec, swapped, permuted) ==
        doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("random-intercept likelihood at mu = 0 equals fixed-only") {
  const CodedDataset data = small_dataset();
  const auto ri_spec = small_spec(ModelStructure::RandomIntercept);
  const auto fo_spec = small_spec(ModelStructure::FixedOnly);
  const auto ri_layout = ParameterLayout::make(ri_spec, data);
  const auto fo_layout = ParameterLayout::make(fo_spec, data);
  auto ri_params = ParameterVector::zeros(ri_layout);
  auto fo_params = ParameterVector::zeros(fo_layout);
  ri_params.values(ri_layout.gamma00()) = 0.6;
  ri_params.values(ri_layout.gamma_p0(0)) = -0.4;
  ri_params.values(ri_layout.gamma_p0(1)) = 0.9;
  fo_params.values(fo_layout.gamma00()) = 0.6;
  fo_params.values(fo_layout.gamma_p0(0)) = -0.4;
  fo_params.values(fo_layout.gamma_p0(1)) = 0.9;

  const auto ri_ll = log_likelihood(
      linear_predictor(ri_spec, ri_params, data), data.response);
  const auto fo_ll = log_likelihood(
      linear_predictor(fo_spec, fo_params, data), data.response);
  CHECK(ri_ll.total == doctest::Approx(fo_ll.total).epsilon(1e-15));
}

TEST_CASE("analytic gradient agrees with central differences") {
  TruthScenario scenario;
  scenario.label = "grad";
  scenario.structure = ModelStructure::RandomInterceptAndSlopes;
  scenario.num_fixed = 2;
  scenario.groups = 4;
  scenario.n_per_group = 12;
  scenario.seed = 99;
  scenario.gamma00 = 0.2;
  scenario.gamma = {0.5, -0.8};
  scenario.sigma0 = 0.5;
  scenario.slope_terms = {"x1"};
  scenario.slope_sigmas = {0.4};
  const SyntheticData synthetic = generate_synthetic(scenario);
  const auto spec = scenario.to_model_spec();
  const auto layout = ParameterLayout::make(spec, synthetic.data);

  Rng rng(2024);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd u(layout.dim());
    for (int i = 0; i < layout.dim(); ++i) u(i) = 0.5 * rng.normal();
    const Eigen::VectorXd grad =
        log_posterior_gradient_unconstrained(spec, layout, u, synthetic.data);
    for (int i = 0; i < layout.dim(); ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(u(i)));
      Eigen::VectorXd up = u, down = u;
      up(i) += h;
      down(i) -= h;
      const double fd =
          (log_posterior_unconstrained(spec, layout, up, synthetic.data) -
           log_posterior_unconstrained(spec, layout, down, synthetic.data)) /
          (2.0 * h);
      CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("three-level layout adds outer-group intercepts") {
  CodedDataset data = small_dataset();
  data.group_index_l3 = {0, 1, 0, 1, 0, 1};
  data.group_labels_l3 = {"t0", "t1"};
  auto spec = small_spec(ModelStructure::RandomIntercept);
  spec.nesting = Nesting::ThreeLevel;
  const auto layout = ParameterLayout::make(spec, data);
  CHECK(layout.level3);
  CHECK(layout.num_groups_l3 == 2);
  // intercept + 2 coef + 2 mu0 + 2 mu3 + sigma0 + sigma3
  CHECK(layout.dim() == 3 + 2 + 2 + 2);

  auto params = ParameterVector::zeros(layout);
  params.values(layout.mu3(1)) = 0.7;
  const Prediction prediction = linear_predictor(spec, params, data);
  CHECK(prediction.eta(1) == doctest::Approx(0.7));
  CHECK(prediction.eta(0) == doctest::Approx(0.0));
}

TEST_CASE("model spec json round trip and validation") {
  const std::string text = R"({
    "label": "demo",
    "response": "injury",
    "fixed_terms": ["bike_lane", "vehicle_state=moving"],
    "random_slope_terms": ["vehicle_state=moving"],
    "structure": "random_intercept_and_slopes",
    "nesting": "vehicle_unit"
  })";
  const HierarchicalModelSpec spec = parse_model_spec(text);
  CHECK(spec.label == "demo");
  CHECK(spec.priors.coef_variance == 1000.0);
  CHECK(spec.structure == ModelStructure::RandomInterceptAndSlopes);
  const HierarchicalModelSpec again = parse_model_spec(model_spec_to_json(spec));
  CHECK(again.fixed_terms == spec.fixed_terms);
  CHECK(again.nesting == spec.nesting);

  // slopes without the matching structure are rejected
  const std::string bad = R"({
    "label": "bad", "response": "injury",
    "fixed_terms": ["bike_lane"],
    "random_slope_terms": ["bike_lane"],
    "structure": "random_intercept"
  })";
  CHECK_THROWS_AS(parse_model_spec(bad), Error);
}

TEST_CASE("centered and non-centered posteriors differ by the Jacobian") {
  TruthScenario scenario;
  scenario.label = "nc";
  scenario.structure = ModelStructure::RandomInterceptAndSlopes;
  scenario.num_fixed = 2;
  scenario.groups = 3;
  scenario.n_per_group = 10;
  scenario.seed = 55;
  scenario.gamma = {0.4, -0.2};
  scenario.sigma0 = 0.6;
  scenario.slope_terms = {"x1"};
  scenario.slope_sigmas = {0.5};
  const SyntheticData synthetic = generate_synthetic(scenario);
  const auto spec = scenario.to_model_spec();
  const auto layout = ParameterLayout::make(spec, synthetic.data);

  Rng rng(8);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd u(layout.dim());
    for (int i = 0; i < layout.dim(); ++i) u(i) = 0.4 * rng.normal();

    // map eta coordinates to the centered mu coordinates by hand
    Eigen::VectorXd v = u;
    double log_jacobian = 0.0;
    const double sigma0 = std::exp(0.5 * u(layout.sigma0_sq()));
    for (int j = 0; j < layout.num_groups; ++j) {
      v(layout.mu0(j)) = sigma0 * u(layout.mu0(j));
      log_jacobian += std::log(sigma0);
    }
    const double sigma1 = std::exp(0.5 * u(layout.sigma_k_sq(0)));
    for (int j = 0; j < layout.num_groups; ++j) {
      v(layout.mu_slope(0, j)) = sigma1 * u(layout.mu_slope(0, j));
      log_jacobian += std::log(sigma1);
    }
    const double noncentered =
        log_posterior_noncentered(spec, layout, u, synthetic.data);
    const double centered =
        log_posterior_unconstrained(spec, layout, v, synthetic.data);
    CHECK(noncentered ==
          doctest::Approx(centered + log_jacobian).epsilon(1e-10));
  }
}
