#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/model.hpp"

namespace hierlogit {

struct McmcConfig {
  int n_chains = 2;
  int n_burnin = 5000;
  int n_keep = 10000;
  std::uint64_t seed = 0;
  int adapt_window = 50;       // proposals per scale update, burn-in only
  double target_accept = 0.35;
  int jobs = 1;                // chains run in parallel when > 1

  void validate() const;
};

struct TargetBlock {
  std::string name;
  std::vector<int> indices;
};

// A log-density over unconstrained coordinates, partitioned into proposal
// blocks. Model posteriors and test harness targets both implement this.
class McmcTarget {
 public:
  virtual ~McmcTarget() = default;

  virtual int dim() const = 0;
  virtual double log_density(const Eigen::VectorXd& u) const = 0;

  virtual std::vector<TargetBlock> blocks() const;
  virtual std::vector<std::string> parameter_names() const;
  virtual Eigen::VectorXd initial_point() const;

  // Maps unconstrained coordinates to the reporting scale kept in draws.
  virtual Eigen::VectorXd report(const Eigen::VectorXd& u) const;

  virtual bool has_pointwise() const { return false; }
  virtual Eigen::VectorXd pointwise_loglik(const Eigen::VectorXd& u) const;
};

// Posterior of a hierarchical logistic model: variances move on log scale,
// draws are reported as coefficients plus standard deviations.
class ModelTarget : public McmcTarget {
 public:
  ModelTarget(const HierarchicalModelSpec& spec, const CodedDataset& data);

  int dim() const override;
  double log_density(const Eigen::VectorXd& u) const override;
  std::vector<TargetBlock> blocks() const override;
  std::vector<std::string> parameter_names() const override;
  Eigen::VectorXd initial_point() const override;
  Eigen::VectorXd report(const Eigen::VectorXd& u) const override;
  bool has_pointwise() const override { return true; }
  Eigen::VectorXd pointwise_loglik(const Eigen::VectorXd& u) const override;

  const ParameterLayout& layout() const { return layout_; }

 private:
  HierarchicalModelSpec spec_;
  const CodedDataset& data_;
  ParameterLayout layout_;
};

struct ChainResult {
  Eigen::MatrixXd draws;          // n_keep x dim, reporting scale
  Eigen::MatrixXd loglik;         // n_keep x n_obs, empty without pointwise
  Eigen::VectorXd log_density;    // kept log-density values
  Eigen::MatrixXd kept_scales;    // n_keep x n_blocks proposal scales
  std::vector<double> accept_rate;  // per block over kept iterations
  bool stuck = false;  // a block accepted < 1% of kept proposals
};

ChainResult run_chain(const McmcTarget& target, const McmcConfig& config,
                      std::uint64_t seed);

struct PosteriorDraws {
  std::vector<ChainResult> chains;
  std::vector<std::string> param_names;

  int n_chains() const { return static_cast<int>(chains.size()); }
  int n_kept() const {
    return chains.empty() ? 0 : static_cast<int>(chains[0].draws.rows());
  }
  int dim() const {
    return chains.empty() ? 0 : static_cast<int>(chains[0].draws.cols());
  }
  long total_draws() const {
    return static_cast<long>(n_chains()) * n_kept();
  }
  // Chain-concatenated draws of one parameter.
  Eigen::VectorXd pooled(int param) const;
  // Stacked pointwise log-likelihood, (chains * kept) x n_obs.
  Eigen::MatrixXd stacked_loglik() const;
};

PosteriorDraws run_mcmc(const McmcTarget& target, const McmcConfig& config);
PosteriorDraws run_mcmc(const HierarchicalModelSpec& spec,
                        const CodedDataset& data, const McmcConfig& config);

struct ConvergenceEntry {
  std::string name;
  double interval_ratio = 1.0;
  bool flag = false;
};

struct ConvergenceReport {
  std::vector<ConvergenceEntry> per_parameter;
  bool overall_pass = true;
  double prob = 0.95;
  double tol = 1.1;
  double max_ratio = 1.0;

  std::string text_table() const;
};

// Width of the pooled central interval over the mean per-chain width.
// Values near 1 indicate the chains agree.
ConvergenceReport interval_ratio_diagnostic(const PosteriorDraws& draws,
                                            double prob = 0.95,
                                            double tol = 1.1);

}  // namespace hierlogit
