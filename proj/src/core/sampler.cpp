#include "core/sampler.hpp"

#include <cmath>
#include <future>
#include <iomanip>
#include <sstream>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace hierlogit {

void McmcConfig::validate() const {
  if (n_chains < 1) throw Error(ErrorCode::InvalidConfig, "n_chains >= 1");
  if (n_keep < 1) throw Error(ErrorCode::InvalidConfig, "n_keep >= 1");
  if (n_burnin < 0) throw Error(ErrorCode::InvalidConfig, "n_burnin >= 0");
  if (adapt_window < 1) {
    throw Error(ErrorCode::InvalidConfig, "adapt_window >= 1");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "target_accept in (0,1)");
  }
}

// --------------------------------------------------------------------------
// McmcTarget defaults
// --------------------------------------------------------------------------

std::vector<TargetBlock> McmcTarget::blocks() const {
  TargetBlock block;
  block.name = "all";
  for (int i = 0; i < dim(); ++i) block.indices.push_back(i);
  return {block};
}

std::vector<std::string> McmcTarget::parameter_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < dim(); ++i) names.push_back("p" + std::to_string(i));
  return names;
}

Eigen::VectorXd McmcTarget::initial_point() const {
  return Eigen::VectorXd::Zero(dim());
}

Eigen::VectorXd McmcTarget::report(const Eigen::VectorXd& u) const {
  return u;
}

Eigen::VectorXd McmcTarget::pointwise_loglik(const Eigen::VectorXd&) const {
  return Eigen::VectorXd();
}

// --------------------------------------------------------------------------
// ModelTarget
// --------------------------------------------------------------------------

ModelTarget::ModelTarget(const HierarchicalModelSpec& spec,
                         const CodedDataset& data)
    : spec_(spec), data_(data), layout_(ParameterLayout::make(spec, data)) {}

int ModelTarget::dim() const { return layout_.dim(); }

double ModelTarget::log_density(const Eigen::VectorXd& u) const {
  return log_posterior_noncentered(spec_, layout_, u, data_);
}

std::vector<TargetBlock> ModelTarget::blocks() const {
  std::vector<TargetBlock> blocks;
  TargetBlock gamma;
  gamma.name = "gamma";
  for (int i = 0; i < layout_.num_gammas(); ++i) gamma.indices.push_back(i);
  blocks.push_back(std::move(gamma));

  if (layout_.random_intercept || layout_.num_slopes > 0) {
    for (int j = 0; j < layout_.num_groups; ++j) {
      TargetBlock block;
      block.name = "u[" + data_.group_labels_l2[j] + "]";
      if (layout_.random_intercept) block.indices.push_back(layout_.mu0(j));
      for (int k = 0; k < layout_.num_slopes; ++k) {
        block.indices.push_back(layout_.mu_slope(k, j));
      }
      blocks.push_back(std::move(block));
    }
  }
  if (layout_.level3) {
    for (int g = 0; g < layout_.num_groups_l3; ++g) {
      TargetBlock block;
      block.name = "u3[" + data_.group_labels_l3[g] + "]";
      block.indices.push_back(layout_.mu3(g));
      blocks.push_back(std::move(block));
    }
  }
  if (layout_.num_variances() > 0) {
    TargetBlock variances;
    variances.name = "variances";
    for (int i = layout_.num_gammas() + layout_.num_random();
         i < layout_.dim(); ++i) {
      variances.indices.push_back(i);
    }
    blocks.push_back(std::move(variances));
  }
  // One whole-vector block per sweep: the per-block moves cannot track
  // ridges that couple a shared coefficient to its group deviations, the
  // covariance-adapted joint move can.
  if (blocks.size() > 1 && layout_.dim() <= 400) {
    TargetBlock joint;
    joint.name = "joint";
    for (int i = 0; i < layout_.dim(); ++i) joint.indices.push_back(i);
    blocks.push_back(std::move(joint));
  }
  return blocks;
}

std::vector<std::string> ModelTarget::parameter_names() const {
  std::vector<std::string> names = layout_.names(data_);
  // variances are reported as standard deviations
  for (auto& name : names) {
    if (name.rfind("var[", 0) == 0) {
      name = "sd[" + name.substr(4);
    }
  }
  return names;
}

Eigen::VectorXd ModelTarget::initial_point() const {
  // gammas and random effects at 0, variances at 1 (log 1 = 0)
  return Eigen::VectorXd::Zero(layout_.dim());
}

Eigen::VectorXd ModelTarget::report(const Eigen::VectorXd& u) const {
  Eigen::VectorXd reported = params_from_noncentered(layout_, u).values;
  for (int i = layout_.num_gammas() + layout_.num_random();
       i < layout_.dim(); ++i) {
    reported(i) = std::sqrt(reported(i));  // variances report as sd
  }
  return reported;
}

Eigen::VectorXd ModelTarget::pointwise_loglik(const Eigen::VectorXd& u) const {
  const ParameterVector params = params_from_noncentered(layout_, u);
  const Prediction prediction = linear_predictor(spec_, params, data_);
  return log_likelihood(prediction, data_.response).pointwise;
}

// --------------------------------------------------------------------------
// Chain driver
// --------------------------------------------------------------------------

namespace {

// One proposal block: spherical Gaussian steps at first, switching to the
// empirical covariance of the burn-in samples once enough accumulate.
// Scale follows a Robbins-Monro recursion toward the target acceptance.
struct BlockState {
  std::vector<int> indices;
  double scale = 1.0;
  Eigen::MatrixXd chol;  // lower factor of the proposal covariance
  Eigen::VectorXd sum;
  Eigen::MatrixXd sum_outer;
  long samples = 0;
  int window_tries = 0;
  int window_accepts = 0;
  int rounds = 0;
  long kept_tries = 0;
  long kept_accepts = 0;

  explicit BlockState(const std::vector<int>& idx) : indices(idx) {
    const int d = static_cast<int>(indices.size());
    scale = 2.38 / std::sqrt(static_cast<double>(d));
    chol = Eigen::MatrixXd::Identity(d, d);
    sum = Eigen::VectorXd::Zero(d);
    sum_outer = Eigen::MatrixXd::Zero(d, d);
  }

  void accumulate(const Eigen::VectorXd& x) {
    Eigen::VectorXd v(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) v(i) = x(indices[i]);
    sum += v;
    sum_outer += v * v.transpose();
    ++samples;
  }

  void refresh_covariance() {
    const int d = static_cast<int>(indices.size());
    if (samples < 10L * d) return;
    const Eigen::VectorXd mean = sum / static_cast<double>(samples);
    Eigen::MatrixXd cov =
        sum_outer / static_cast<double>(samples) - mean * mean.transpose();
    cov += 1e-8 * Eigen::MatrixXd::Identity(d, d);
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) chol = llt.matrixL();
  }
};

}  // namespace

ChainResult run_chain(const McmcTarget& target, const McmcConfig& config,
                      std::uint64_t seed) {
  config.validate();
  const int dim = target.dim();
  const auto block_defs = target.blocks();
  const int n_blocks = static_cast<int>(block_defs.size());

  Rng rng(seed);
  Eigen::VectorXd x = target.initial_point();
  double lp = target.log_density(x);
  if (!std::isfinite(lp)) {
    throw Error(ErrorCode::NonFiniteLogPosterior,
                "log density not finite at the initial point");
  }

  std::vector<BlockState> blocks;
  blocks.reserve(n_blocks);
  for (const auto& def : block_defs) blocks.emplace_back(def.indices);

  ChainResult result;
  result.draws.resize(config.n_keep, dim);
  result.log_density.resize(config.n_keep);
  result.kept_scales.resize(config.n_keep, n_blocks);
  const bool pointwise = target.has_pointwise();

  Eigen::VectorXd proposal(dim);
  const int total = config.n_burnin + config.n_keep;
  for (int iter = 0; iter < total; ++iter) {
    const bool adapting = iter < config.n_burnin;
    for (int b = 0; b < n_blocks; ++b) {
      BlockState& block = blocks[b];
      const int d = static_cast<int>(block.indices.size());
      Eigen::VectorXd z(d);
      for (int i = 0; i < d; ++i) z(i) = rng.normal();
      const Eigen::VectorXd step = block.scale * (block.chol * z);
      proposal = x;
      for (int i = 0; i < d; ++i) proposal(block.indices[i]) += step(i);

      const double lp_new = target.log_density(proposal);
      const double u = rng.uniform_open();  // always consumed: keeps the
                                            // stream aligned across rejects
      const bool accept = std::isfinite(lp_new) && std::log(u) < lp_new - lp;
      if (accept) {
        x.swap(proposal);
        lp = lp_new;
      }
      if (adapting) {
        block.accumulate(x);
        ++block.window_tries;
        if (accept) ++block.window_accepts;
        if (block.window_tries == config.adapt_window) {
          const double rate = static_cast<double>(block.window_accepts) /
                              static_cast<double>(config.adapt_window);
          ++block.rounds;
          block.scale *=
              std::exp((rate - config.target_accept) /
                       std::sqrt(static_cast<double>(block.rounds)));
          block.scale = std::clamp(block.scale, 1e-8, 1e4);
          block.refresh_covariance();
          block.window_tries = 0;
          block.window_accepts = 0;
        }
      } else {
        ++block.kept_tries;
        if (accept) ++block.kept_accepts;
      }
    }
    if (!adapting) {
      const int k = iter - config.n_burnin;
      result.draws.row(k) = target.report(x);
      result.log_density(k) = lp;
      for (int b = 0; b < n_blocks; ++b) {
        result.kept_scales(k, b) = blocks[b].scale;
      }
      if (pointwise) {
        Eigen::VectorXd ll = target.pointwise_loglik(x);
        if (k == 0) {
          result.loglik.resize(config.n_keep, ll.size());
        }
        result.loglik.row(k) = ll;
      }
    }
  }

  for (const auto& block : blocks) {
    const double rate =
        block.kept_tries > 0 ? static_cast<double>(block.kept_accepts) /
                                   static_cast<double>(block.kept_tries)
                             : 0.0;
    result.accept_rate.push_back(rate);
    if (rate < 0.01) result.stuck = true;
  }
  return result;
}

// --------------------------------------------------------------------------
// Multi-chain driver
// --------------------------------------------------------------------------

Eigen::VectorXd PosteriorDraws::pooled(int param) const {
  Eigen::VectorXd out(total_draws());
  long offset = 0;
  for (const auto& chain : chains) {
    out.segment(offset, chain.draws.rows()) = chain.draws.col(param);
    offset += chain.draws.rows();
  }
  return out;
}

Eigen::MatrixXd PosteriorDraws::stacked_loglik() const {
  if (chains.empty() || chains[0].loglik.size() == 0) return {};
  const long rows = total_draws();
  const long cols = chains[0].loglik.cols();
  Eigen::MatrixXd out(rows, cols);
  long offset = 0;
  for (const auto& chain : chains) {
    out.middleRows(offset, chain.loglik.rows()) = chain.loglik;
    offset += chain.loglik.rows();
  }
  return out;
}

PosteriorDraws run_mcmc(const McmcTarget& target, const McmcConfig& config) {
  config.validate();
  PosteriorDraws draws;
  draws.param_names = target.parameter_names();
  draws.chains.resize(config.n_chains);
  if (config.jobs > 1) {
    std::vector<std::future<ChainResult>> futures;
    for (int c = 0; c < config.n_chains; ++c) {
      futures.push_back(std::async(std::launch::async, [&, c] {
        return run_chain(target, config, chain_seed(config.seed, c));
      }));
    }
    for (int c = 0; c < config.n_chains; ++c) {
      draws.chains[c] = futures[c].get();
    }
  } else {
    for (int c = 0; c < config.n_chains; ++c) {
      draws.chains[c] = run_chain(target, config, chain_seed(config.seed, c));
    }
  }
  return draws;
}

PosteriorDraws run_mcmc(const HierarchicalModelSpec& spec,
                        const CodedDataset& data, const McmcConfig& config) {
  ModelTarget target(spec, data);
  return run_mcmc(target, config);
}

// --------------------------------------------------------------------------
// Convergence diagnostic
// --------------------------------------------------------------------------

ConvergenceReport interval_ratio_diagnostic(const PosteriorDraws& draws,
                                            double prob, double tol) {
  if (draws.n_chains() < 2) {
    throw Error(ErrorCode::InsufficientDraws,
                "interval-ratio diagnostic needs >= 2 chains");
  }
  if (draws.n_kept() < 10) {
    throw Error(ErrorCode::InsufficientDraws,
                "interval-ratio diagnostic needs >= 10 draws per chain");
  }
  const double lo_p = (1.0 - prob) / 2.0;
  const double hi_p = 1.0 - lo_p;

  ConvergenceReport report;
  report.prob = prob;
  report.tol = tol;
  for (int param = 0; param < draws.dim(); ++param) {
    // chains with coincident draws share one empirical distribution, so
    // the ratio is 1 by definition (interpolation would blur it)
    bool coincident = true;
    for (int c = 1; c < draws.n_chains() && coincident; ++c) {
      coincident =
          draws.chains[c].draws.col(param) == draws.chains[0].draws.col(param);
    }
    const Eigen::VectorXd pooled = draws.pooled(param);
    const double pooled_width =
        quantile_type7(pooled, hi_p) - quantile_type7(pooled, lo_p);
    double within = 0.0;
    for (const auto& chain : draws.chains) {
      const Eigen::VectorXd values = chain.draws.col(param);
      within += quantile_type7(values, hi_p) - quantile_type7(values, lo_p);
    }
    within /= static_cast<double>(draws.n_chains());

    double ratio;
    if (coincident || (within == 0.0 && pooled_width == 0.0)) {
      ratio = 1.0;
    } else if (within == 0.0) {
      ratio = std::numeric_limits<double>::infinity();
    } else {
      ratio = pooled_width / within;
    }
    ConvergenceEntry entry;
    entry.name = draws.param_names[param];
    entry.interval_ratio = ratio;
    entry.flag = ratio > tol || ratio < 1.0 / tol;
    report.max_ratio = std::max(report.max_ratio, ratio);
    if (ratio > tol) report.overall_pass = false;
    report.per_parameter.push_back(std::move(entry));
  }
  return report;
}

std::string ConvergenceReport::text_table() const {
  size_t width = 9;
  for (const auto& entry : per_parameter) {
    width = std::max(width, entry.name.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width) + 2) << "parameter"
      << std::right << std::setw(16) << "interval_ratio"
      << "  flag\n";
  for (const auto& entry : per_parameter) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << entry.name
        << std::right << std::setw(16) << std::fixed << std::setprecision(4)
        << entry.interval_ratio << std::defaultfloat << "  "
        << (entry.flag ? "FLAG" : "ok") << "\n";
  }
  out << "overall: " << (overall_pass ? "PASS" : "FAIL") << " (tolerance "
      << tol << ")\n";
  return out.str();
}

}  // namespace hierlogit
