#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "core/errors.hpp"

namespace hierlogit {

using nlohmann::json;

// --------------------------------------------------------------------------
// Spec
// --------------------------------------------------------------------------

void PriorConfig::validate() const {
  if (!(coef_variance > 0.0)) {
    throw Error(ErrorCode::NonPositiveVariance, "coef_variance");
  }
  if (!(variance_shape > 0.0) || !(variance_rate > 0.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "variance prior shape/rate must be positive");
  }
}

const char* structure_name(ModelStructure structure) {
  switch (structure) {
    case ModelStructure::FixedOnly: return "fixed_only";
    case ModelStructure::RandomIntercept: return "random_intercept";
    case ModelStructure::RandomInterceptAndSlopes:
      return "random_intercept_and_slopes";
  }
  return "fixed_only";
}

ModelStructure structure_from_name(const std::string& name) {
  if (name == "fixed_only") return ModelStructure::FixedOnly;
  if (name == "random_intercept") return ModelStructure::RandomIntercept;
  if (name == "random_intercept_and_slopes") {
    return ModelStructure::RandomInterceptAndSlopes;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown structure '" + name + "'");
}

void HierarchicalModelSpec::validate() const {
  priors.validate();
  if (response_name.empty()) {
    throw Error(ErrorCode::InvalidConfig, "model needs a response");
  }
  if (!random_slope_terms.empty() &&
      structure != ModelStructure::RandomInterceptAndSlopes) {
    throw Error(ErrorCode::InvalidConfig,
                "random slopes need structure random_intercept_and_slopes");
  }
  for (const auto& term : random_slope_terms) {
    if (std::find(fixed_terms.begin(), fixed_terms.end(), term) ==
        fixed_terms.end()) {
      throw Error(ErrorCode::InvalidConfig,
                  "random slope term '" + term + "' is not a fixed term");
    }
  }
}

HierarchicalModelSpec parse_model_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("model spec: ") +
                                              e.what());
  }
  HierarchicalModelSpec spec;
  try {
    spec.label = doc.value("label", "");
    spec.response_name = doc.at("response").get<std::string>();
    spec.fixed_terms =
        doc.value("fixed_terms", std::vector<std::string>{});
    spec.random_slope_terms =
        doc.value("random_slope_terms", std::vector<std::string>{});
    spec.level2_terms =
        doc.value("level2_terms", std::vector<std::string>{});
    spec.structure =
        structure_from_name(doc.value("structure", "random_intercept"));
    spec.nesting = nesting_from_name(doc.value("nesting", "vehicle_unit"));
    if (doc.contains("priors")) {
      const auto& p = doc["priors"];
      spec.priors.coef_mean = p.value("coef_mean", 0.0);
      spec.priors.coef_variance = p.value("coef_variance", 1000.0);
      spec.priors.variance_shape = p.value("variance_shape", 0.001);
      spec.priors.variance_rate = p.value("variance_rate", 0.001);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("model spec: ") +
                                              e.what());
  }
  spec.validate();
  return spec;
}

HierarchicalModelSpec load_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model_spec(buffer.str());
}

std::string model_spec_to_json(const HierarchicalModelSpec& spec) {
  json doc;
  doc["label"] = spec.label;
  doc["response"] = spec.response_name;
  doc["fixed_terms"] = spec.fixed_terms;
  doc["random_slope_terms"] = spec.random_slope_terms;
  doc["level2_terms"] = spec.level2_terms;
  doc["structure"] = structure_name(spec.structure);
  doc["nesting"] = nesting_name(spec.nesting);
  doc["priors"] = {{"coef_mean", spec.priors.coef_mean},
                   {"coef_variance", spec.priors.coef_variance},
                   {"variance_shape", spec.priors.variance_shape},
                   {"variance_rate", spec.priors.variance_rate}};
  return doc.dump(2);
}

// --------------------------------------------------------------------------
// Layout
// --------------------------------------------------------------------------

ParameterLayout ParameterLayout::make(const HierarchicalModelSpec& spec,
                                      const CodedDataset& data) {
  spec.validate();
  ParameterLayout layout;
  layout.num_fixed = data.p();
  layout.num_level2 = data.q();
  layout.num_groups = data.num_groups_l2();
  layout.random_intercept = spec.structure != ModelStructure::FixedOnly;
  if (spec.nesting == Nesting::ThreeLevel) {
    if (!data.has_level3()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "three-level nesting needs a level-3 group index");
    }
    layout.level3 = layout.random_intercept;
    layout.num_groups_l3 = data.num_groups_l3();
  }
  if (spec.structure == ModelStructure::RandomInterceptAndSlopes) {
    for (const auto& term : spec.random_slope_terms) {
      bool found = false;
      for (int c = 0; c < data.p(); ++c) {
        const std::string& column = data.column_names[c];
        if (column == term || column.rfind(term + "=", 0) == 0) {
          layout.slope_columns.push_back(c);
          found = true;
        }
      }
      if (!found) {
        throw Error(ErrorCode::DimensionMismatch,
                    "random slope term '" + term +
                        "' matches no design column");
      }
    }
    std::sort(layout.slope_columns.begin(), layout.slope_columns.end());
    layout.slope_columns.erase(std::unique(layout.slope_columns.begin(),
                                           layout.slope_columns.end()),
                               layout.slope_columns.end());
    layout.num_slopes = static_cast<int>(layout.slope_columns.size());
  }
  return layout;
}

std::vector<std::string> ParameterLayout::names(
    const CodedDataset& data) const {
  std::vector<std::string> out(dim());
  out[gamma00()] = "intercept";
  for (int p = 0; p < num_fixed; ++p) {
    out[gamma_p0(p)] = "b[" + data.column_names[p] + "]";
  }
  for (int q = 0; q < num_level2; ++q) {
    out[gamma_0q(q)] = "g[" + data.level2_names[q] + "]";
  }
  for (int p = 0; p < num_fixed; ++p) {
    for (int q = 0; q < num_level2; ++q) {
      out[gamma_pq(p, q)] = "gx[" + data.column_names[p] + "|" +
                            data.level2_names[q] + "]";
    }
  }
  if (random_intercept) {
    for (int j = 0; j < num_groups; ++j) {
      out[mu0(j)] = "u0[" + data.group_labels_l2[j] + "]";
    }
  }
  for (int k = 0; k < num_slopes; ++k) {
    for (int j = 0; j < num_groups; ++j) {
      out[mu_slope(k, j)] = "u[" + data.column_names[slope_columns[k]] + "|" +
                            data.group_labels_l2[j] + "]";
    }
  }
  if (level3) {
    for (int g = 0; g < num_groups_l3; ++g) {
      out[mu3(g)] = "u3[" + data.group_labels_l3[g] + "]";
    }
  }
  if (random_intercept) out[sigma0_sq()] = "var[intercept]";
  for (int k = 0; k < num_slopes; ++k) {
    out[sigma_k_sq(k)] = "var[" + data.column_names[slope_columns[k]] + "]";
  }
  if (level3) out[sigma3_sq()] = "var[level3]";
  return out;
}

ParameterVector ParameterVector::zeros(const ParameterLayout& layout) {
  ParameterVector params;
  params.layout = layout;
  params.values = Eigen::VectorXd::Zero(layout.dim());
  // unit variances keep the zero point inside the support
  for (int i = layout.num_gammas() + layout.num_random(); i < layout.dim();
       ++i) {
    params.values(i) = 1.0;
  }
  return params;
}

// --------------------------------------------------------------------------
// Densities
// --------------------------------------------------------------------------

double normal_logpdf(double x, double mean, double variance) {
  static const double kLog2Pi = std::log(2.0 * 3.14159265358979323846);
  const double centered = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) -
         centered * centered / (2.0 * variance);
}

double inverse_gamma_logpdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - rate / x;
}

double inv_logit(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// --------------------------------------------------------------------------
// Operations
// --------------------------------------------------------------------------

Prediction linear_predictor(const HierarchicalModelSpec& spec,
                            const ParameterVector& params,
                            const CodedDataset& data) {
  const ParameterLayout& layout = params.layout;
  if (layout.num_fixed != data.p() || layout.num_level2 != data.q() ||
      (layout.random_intercept && layout.num_groups != data.num_groups_l2()) ||
      (layout.level3 && layout.num_groups_l3 != data.num_groups_l3()) ||
      params.values.size() != layout.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "parameters vs dataset");
  }
  if (layout.random_intercept !=
      (spec.structure != ModelStructure::FixedOnly)) {
    throw Error(ErrorCode::DimensionMismatch, "layout vs spec structure");
  }
  const int n = data.n();
  Prediction prediction;
  prediction.eta.resize(n);
  prediction.pi.resize(n);

  // Group-level intercept contribution: gamma_0q Z_qj (+ mu_0j later).
  Eigen::VectorXd group_base = Eigen::VectorXd::Zero(data.num_groups_l2());
  for (int j = 0; j < data.num_groups_l2(); ++j) {
    for (int q = 0; q < layout.num_level2; ++q) {
      group_base(j) +=
          params.values(layout.gamma_0q(q)) * data.level2_design(j, q);
    }
  }

  for (int i = 0; i < n; ++i) {
    const int j = data.group_index_l2[i];
    double eta = params.values(layout.gamma00()) + group_base(j);
    if (layout.random_intercept) eta += params.values(layout.mu0(j));
    for (int p = 0; p < layout.num_fixed; ++p) {
      const double x = data.fixed_design(i, p);
      if (x == 0.0) continue;
      double coef = params.values(layout.gamma_p0(p));
      for (int q = 0; q < layout.num_level2; ++q) {
        coef += params.values(layout.gamma_pq(p, q)) * data.level2_design(j, q);
      }
      eta += coef * x;
    }
    for (int k = 0; k < layout.num_slopes; ++k) {
      const double x = data.fixed_design(i, layout.slope_columns[k]);
      if (x != 0.0) eta += params.values(layout.mu_slope(k, j)) * x;
    }
    if (layout.level3) {
      eta += params.values(layout.mu3(data.group_index_l3[i]));
    }
    prediction.eta(i) = eta;
    prediction.pi(i) = inv_logit(eta);
  }
  return prediction;
}

LogLikelihood log_likelihood(const Prediction& prediction,
                             const Eigen::VectorXd& response) {
  const int n = static_cast<int>(response.size());
  if (prediction.eta.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "prediction vs response");
  }
  LogLikelihood result;
  result.pointwise.resize(n);
  for (int i = 0; i < n; ++i) {
    const double y = response(i);
    if (y != 0.0 && y != 1.0) {
      throw Error(ErrorCode::NonBinaryResponse,
                  "response[" + std::to_string(i) + "] = " +
                      std::to_string(y));
    }
    const double eta = prediction.eta(i);
    // y*eta - log(1 + exp(eta)), evaluated on the stable branch
    double ll;
    if (eta >= 0.0) {
      ll = (y - 1.0) * eta - std::log1p(std::exp(-eta));
    } else {
      ll = y * eta - std::log1p(std::exp(eta));
    }
    result.pointwise(i) = ll;
    result.total += ll;
  }
  return result;
}

double log_prior(const HierarchicalModelSpec& spec,
                 const ParameterVector& params) {
  const ParameterLayout& layout = params.layout;
  const PriorConfig& priors = spec.priors;
  for (int i = layout.num_gammas() + layout.num_random(); i < layout.dim();
       ++i) {
    if (!(params.values(i) > 0.0)) {
      throw Error(ErrorCode::NonPositiveVariance,
                  "variance slot " + std::to_string(i));
    }
  }
  double total = 0.0;
  for (int i = 0; i < layout.num_gammas(); ++i) {
    total += normal_logpdf(params.values(i), priors.coef_mean,
                           priors.coef_variance);
  }
  if (layout.random_intercept) {
    const double sigma0_sq = params.values(layout.sigma0_sq());
    total += inverse_gamma_logpdf(sigma0_sq, priors.variance_shape,
                                  priors.variance_rate);
    for (int j = 0; j < layout.num_groups; ++j) {
      total += normal_logpdf(params.values(layout.mu0(j)), 0.0, sigma0_sq);
    }
  }
  for (int k = 0; k < layout.num_slopes; ++k) {
    const double sigma_sq = params.values(layout.sigma_k_sq(k));
    total += inverse_gamma_logpdf(sigma_sq, priors.variance_shape,
                                  priors.variance_rate);
    for (int j = 0; j < layout.num_groups; ++j) {
      total +=
          normal_logpdf(params.values(layout.mu_slope(k, j)), 0.0, sigma_sq);
    }
  }
  if (layout.level3) {
    const double sigma3_sq = params.values(layout.sigma3_sq());
    total += inverse_gamma_logpdf(sigma3_sq, priors.variance_shape,
                                  priors.variance_rate);
    for (int g = 0; g < layout.num_groups_l3; ++g) {
      total += normal_logpdf(params.values(layout.mu3(g)), 0.0, sigma3_sq);
    }
  }
  return total;
}

double log_posterior(const HierarchicalModelSpec& spec,
                     const ParameterVector& params, const CodedDataset& data) {
  const Prediction prediction = linear_predictor(spec, params, data);
  const LogLikelihood ll = log_likelihood(prediction, data.response);
  return ll.total + log_prior(spec, params);
}

// --------------------------------------------------------------------------
// Unconstrained coordinates
// --------------------------------------------------------------------------

ParameterVector params_from_unconstrained(const ParameterLayout& layout,
                                          const Eigen::VectorXd& u) {
  ParameterVector params;
  params.layout = layout;
  params.values = u;
  for (int i = layout.num_gammas() + layout.num_random(); i < layout.dim();
       ++i) {
    params.values(i) = std::exp(u(i));
  }
  return params;
}

Eigen::VectorXd unconstrained_from_params(const ParameterVector& params) {
  Eigen::VectorXd u = params.values;
  const ParameterLayout& layout = params.layout;
  for (int i = layout.num_gammas() + layout.num_random(); i < layout.dim();
       ++i) {
    u(i) = std::log(params.values(i));
  }
  return u;
}

double log_posterior_unconstrained(const HierarchicalModelSpec& spec,
                                   const ParameterLayout& layout,
                                   const Eigen::VectorXd& u,
                                   const CodedDataset& data) {
  const ParameterVector params = params_from_unconstrained(layout, u);
  double jacobian = 0.0;
  for (int i = layout.num_gammas() + layout.num_random(); i < layout.dim();
       ++i) {
    jacobian += u(i);  // d sigma^2 / d log sigma^2 = sigma^2
  }
  return log_posterior(spec, params, data) + jacobian;
}

ParameterVector params_from_noncentered(const ParameterLayout& layout,
                                        const Eigen::VectorXd& u) {
  ParameterVector params;
  params.layout = layout;
  params.values = u;
  for (int i = layout.num_gammas() + layout.num_random(); i < layout.dim();
       ++i) {
    params.values(i) = std::exp(u(i));
  }
  if (layout.random_intercept) {
    const double sigma0 = std::exp(0.5 * u(layout.sigma0_sq()));
    for (int j = 0; j < layout.num_groups; ++j) {
      params.values(layout.mu0(j)) = sigma0 * u(layout.mu0(j));
    }
  }
  for (int k = 0; k < layout.num_slopes; ++k) {
    const double sigma_k = std::exp(0.5 * u(layout.sigma_k_sq(k)));
    for (int j = 0; j < layout.num_groups; ++j) {
      params.values(layout.mu_slope(k, j)) =
          sigma_k * u(layout.mu_slope(k, j));
    }
  }
  if (layout.level3) {
    const double sigma3 = std::exp(0.5 * u(layout.sigma3_sq()));
    for (int g = 0; g < layout.num_groups_l3; ++g) {
      params.values(layout.mu3(g)) = sigma3 * u(layout.mu3(g));
    }
  }
  return params;
}

double log_posterior_noncentered(const HierarchicalModelSpec& spec,
                                 const ParameterLayout& layout,
                                 const Eigen::VectorXd& u,
                                 const CodedDataset& data) {
  const ParameterVector params = params_from_noncentered(layout, u);
  const Prediction prediction = linear_predictor(spec, params, data);
  double total = log_likelihood(prediction, data.response).total;
  const PriorConfig& priors = spec.priors;
  for (int i = 0; i < layout.num_gammas(); ++i) {
    total += normal_logpdf(u(i), priors.coef_mean, priors.coef_variance);
  }
  // standardized deviations carry a unit normal prior
  for (int i = layout.num_gammas();
       i < layout.num_gammas() + layout.num_random(); ++i) {
    total += normal_logpdf(u(i), 0.0, 1.0);
  }
  for (int i = layout.num_gammas() + layout.num_random(); i < layout.dim();
       ++i) {
    total += inverse_gamma_logpdf(std::exp(u(i)), priors.variance_shape,
                                  priors.variance_rate) +
             u(i);  // log sigma^2 Jacobian
  }
  return total;
}

Eigen::VectorXd log_posterior_gradient_unconstrained(
    const HierarchicalModelSpec& spec, const ParameterLayout& layout,
    const Eigen::VectorXd& u, const CodedDataset& data) {
  const ParameterVector params = params_from_unconstrained(layout, u);
  const PriorConfig& priors = spec.priors;
  const Prediction prediction = linear_predictor(spec, params, data);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout.dim());

  // Likelihood: d ll / d eta_i = y_i - pi_i, then chain through eta.
  for (int i = 0; i < data.n(); ++i) {
    const double r = data.response(i) - prediction.pi(i);
    const int j = data.group_index_l2[i];
    grad(layout.gamma00()) += r;
    for (int p = 0; p < layout.num_fixed; ++p) {
      const double x = data.fixed_design(i, p);
      if (x == 0.0) continue;
      grad(layout.gamma_p0(p)) += r * x;
      for (int q = 0; q < layout.num_level2; ++q) {
        grad(layout.gamma_pq(p, q)) += r * x * data.level2_design(j, q);
      }
    }
    for (int q = 0; q < layout.num_level2; ++q) {
      grad(layout.gamma_0q(q)) += r * data.level2_design(j, q);
    }
    if (layout.random_intercept) grad(layout.mu0(j)) += r;
    for (int k = 0; k < layout.num_slopes; ++k) {
      const double x = data.fixed_design(i, layout.slope_columns[k]);
      if (x != 0.0) grad(layout.mu_slope(k, j)) += r * x;
    }
    if (layout.level3) grad(layout.mu3(data.group_index_l3[i])) += r;
  }

  // Coefficient priors.
  for (int i = 0; i < layout.num_gammas(); ++i) {
    grad(i) -= (params.values(i) - priors.coef_mean) / priors.coef_variance;
  }

  auto variance_block = [&](int sigma_slot, const std::vector<int>& mu_slots) {
    const double sigma_sq = params.values(sigma_slot);
    double d_sigma = -(priors.variance_shape + 1.0) / sigma_sq +
                     priors.variance_rate / (sigma_sq * sigma_sq);
    for (int slot : mu_slots) {
      const double mu = params.values(slot);
      grad(slot) -= mu / sigma_sq;
      d_sigma += -0.5 / sigma_sq + mu * mu / (2.0 * sigma_sq * sigma_sq);
    }
    // chain rule through sigma^2 = exp(theta), plus the Jacobian term
    grad(sigma_slot) = d_sigma * sigma_sq + 1.0;
  };

  if (layout.random_intercept) {
    std::vector<int> slots;
    for (int j = 0; j < layout.num_groups; ++j) slots.push_back(layout.mu0(j));
    variance_block(layout.sigma0_sq(), slots);
  }
  for (int k = 0; k < layout.num_slopes; ++k) {
    std::vector<int> slots;
    for (int j = 0; j < layout.num_groups; ++j) {
      slots.push_back(layout.mu_slope(k, j));
    }
    variance_block(layout.sigma_k_sq(k), slots);
  }
  if (layout.level3) {
    std::vector<int> slots;
    for (int g = 0; g < layout.num_groups_l3; ++g) {
      slots.push_back(layout.mu3(g));
    }
    variance_block(layout.sigma3_sq(), slots);
  }
  return grad;
}

}  // namespace hierlogit
