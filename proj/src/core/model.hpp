#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace hierlogit {

struct PriorConfig {
  double coef_mean = 0.0;
  double coef_variance = 1000.0;  // variance, not standard deviation
  double variance_shape = 0.001;  // inverse-gamma on each variance component
  double variance_rate = 0.001;

  void validate() const;
};

enum class ModelStructure {
  FixedOnly,
  RandomIntercept,
  RandomInterceptAndSlopes,
};

const char* structure_name(ModelStructure structure);
ModelStructure structure_from_name(const std::string& name);

struct HierarchicalModelSpec {
  std::string label;
  std::string response_name;
  std::vector<std::string> fixed_terms;         // "variable" or "variable=level"
  std::vector<std::string> random_slope_terms;  // subset of fixed_terms
  std::vector<std::string> level2_terms;        // group-level covariates
  ModelStructure structure = ModelStructure::RandomIntercept;
  Nesting nesting = Nesting::VehicleUnit;
  PriorConfig priors;

  void validate() const;
};

HierarchicalModelSpec parse_model_spec(const std::string& json_text);
HierarchicalModelSpec load_model_spec(const std::filesystem::path& path);
std::string model_spec_to_json(const HierarchicalModelSpec& spec);

// --------------------------------------------------------------------------
// Parameter layout
// --------------------------------------------------------------------------

// Flat layout over [intercept, fixed coefficients, level-2 coefficients,
// cross-level coefficients, level-2 random intercepts, random slopes,
// level-3 random intercepts, variance components]. Variance slots hold
// natural-scale variances in a ParameterVector; the sampler maps them
// through log for unconstrained moves.
struct ParameterLayout {
  int num_fixed = 0;        // P
  int num_level2 = 0;       // Q
  int num_slopes = 0;       // K: design columns with a random slope
  int num_groups = 0;       // J (level 2)
  int num_groups_l3 = 0;    // level-3 groups, 0 when absent
  bool random_intercept = false;
  bool level3 = false;
  std::vector<int> slope_columns;  // design column index per slope k

  int gamma00() const { return 0; }
  int gamma_p0(int p) const { return 1 + p; }
  int gamma_0q(int q) const { return 1 + num_fixed + q; }
  int gamma_pq(int p, int q) const {
    return 1 + num_fixed + num_level2 + p * num_level2 + q;
  }
  int num_gammas() const {
    return 1 + num_fixed + num_level2 + num_fixed * num_level2;
  }
  int mu0(int j) const { return num_gammas() + j; }
  int mu_slope(int k, int j) const {
    return num_gammas() + (random_intercept ? num_groups : 0) +
           k * num_groups + j;
  }
  int mu3(int g) const {
    return num_gammas() + (random_intercept ? num_groups : 0) +
           num_slopes * num_groups + g;
  }
  int num_random() const {
    return (random_intercept ? num_groups : 0) + num_slopes * num_groups +
           (level3 ? num_groups_l3 : 0);
  }
  int sigma0_sq() const { return num_gammas() + num_random(); }
  int sigma_k_sq(int k) const {
    return num_gammas() + num_random() + (random_intercept ? 1 : 0) + k;
  }
  int sigma3_sq() const {
    return num_gammas() + num_random() + (random_intercept ? 1 : 0) +
           num_slopes;
  }
  int num_variances() const {
    return (random_intercept ? 1 : 0) + num_slopes + (level3 ? 1 : 0);
  }
  int dim() const { return num_gammas() + num_random() + num_variances(); }

  bool is_variance(int index) const {
    return index >= num_gammas() + num_random();
  }

  std::vector<std::string> names(const CodedDataset& data) const;

  static ParameterLayout make(const HierarchicalModelSpec& spec,
                              const CodedDataset& data);
};

struct ParameterVector {
  ParameterLayout layout;
  Eigen::VectorXd values;  // natural scale; variance slots hold sigma^2

  static ParameterVector zeros(const ParameterLayout& layout);

  double gamma00() const { return values(layout.gamma00()); }
  double sigma0_sq() const { return values(layout.sigma0_sq()); }
};

// --------------------------------------------------------------------------
// Model operations
// --------------------------------------------------------------------------

struct Prediction {
  Eigen::VectorXd eta;  // linear predictor per row
  Eigen::VectorXd pi;   // inverse-logit of eta
};

struct LogLikelihood {
  double total = 0.0;
  Eigen::VectorXd pointwise;
};

Prediction linear_predictor(const HierarchicalModelSpec& spec,
                            const ParameterVector& params,
                            const CodedDataset& data);

LogLikelihood log_likelihood(const Prediction& prediction,
                             const Eigen::VectorXd& response);

double log_prior(const HierarchicalModelSpec& spec,
                 const ParameterVector& params);

// Unnormalized: log_likelihood + log_prior on the natural scale.
double log_posterior(const HierarchicalModelSpec& spec,
                     const ParameterVector& params, const CodedDataset& data);

// Unconstrained coordinates: variance slots hold log(sigma^2); the log
// Jacobian of the transform is included.
ParameterVector params_from_unconstrained(const ParameterLayout& layout,
                                          const Eigen::VectorXd& u);
Eigen::VectorXd unconstrained_from_params(const ParameterVector& params);

double log_posterior_unconstrained(const HierarchicalModelSpec& spec,
                                   const ParameterLayout& layout,
                                   const Eigen::VectorXd& u,
                                   const CodedDataset& data);

// Non-centered coordinates: random-effect slots hold standardized
// deviations eta with mu = sigma * eta, variances stay on log scale.
// Decouples the random effects from their scale, which the sampler
// needs when the data push sigma toward zero.
ParameterVector params_from_noncentered(const ParameterLayout& layout,
                                        const Eigen::VectorXd& u);

double log_posterior_noncentered(const HierarchicalModelSpec& spec,
                                 const ParameterLayout& layout,
                                 const Eigen::VectorXd& u,
                                 const CodedDataset& data);

Eigen::VectorXd log_posterior_gradient_unconstrained(
    const HierarchicalModelSpec& spec, const ParameterLayout& layout,
    const Eigen::VectorXd& u, const CodedDataset& data);

// Density helpers shared with tests and the evaluation module.
double normal_logpdf(double x, double mean, double variance);
double inverse_gamma_logpdf(double x, double shape, double rate);
double inv_logit(double eta);

}  // namespace hierlogit
