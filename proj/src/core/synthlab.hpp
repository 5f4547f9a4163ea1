#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/model.hpp"

namespace hierlogit {

// Known-truth scenario for sampler and criteria validation. Covariates are
// balanced binary columns named x1..xP; rows split evenly over groups.
struct TruthScenario {
  std::string label;
  ModelStructure structure = ModelStructure::RandomIntercept;
  int num_fixed = 1;
  int groups = 10;
  int n_per_group = 50;
  std::uint64_t seed = 0;

  double gamma00 = 0.0;
  std::vector<double> gamma;              // fixed coefficients, size num_fixed
  double sigma0 = 0.5;                    // random-intercept sd
  std::vector<std::string> slope_terms;   // e.g. "x1"
  std::vector<double> slope_sigmas;       // parallel to slope_terms
  PriorConfig priors;

  void validate() const;
  HierarchicalModelSpec to_model_spec() const;
};

TruthScenario parse_scenario(const std::string& json_text);
TruthScenario load_scenario(const std::filesystem::path& path);

struct SyntheticData {
  CodedDataset data;
  Eigen::VectorXd true_mu0;        // realized group intercept deviations
  Eigen::MatrixXd true_mu_slopes;  // realized slope deviations, K x J
};

SyntheticData generate_synthetic(const TruthScenario& scenario);

// --------------------------------------------------------------------------
// Exact small-model oracle
// --------------------------------------------------------------------------

struct GridPosterior {
  Eigen::VectorXd grid;
  Eigen::VectorXd unnormalized_logdensity;
  Eigen::VectorXd normalized_density;
  double step = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

// Exact-to-quadrature posterior of the intercept-only logistic model
// (the dataset must carry zero fixed columns). Normalization uses the
// trapezoid rule; the grid must contain essentially all the mass.
GridPosterior grid_posterior_oracle(const CodedDataset& data,
                                    const PriorConfig& prior, double lo,
                                    double hi, double step);

// Intercept-only dataset wrapper for oracle and sampler agreement checks.
CodedDataset intercept_only_dataset(const std::vector<int>& responses);

// --------------------------------------------------------------------------
// Bundled fixture
// --------------------------------------------------------------------------

// Writes the bundled synthetic crash and disengagement tables. Marginal
// level frequencies mirror the published per-mode distribution summary;
// rows are otherwise independently shuffled, so the joint structure is
// synthetic. Fully deterministic.
void write_fixture(const std::filesystem::path& crashes_csv,
                   const std::filesystem::path& disengagements_csv);

// The fixture's catalog definition (JSON text), kept alongside the
// generator so labels cannot drift apart.
std::string fixture_catalog_json();

}  // namespace hierlogit
