#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "epifield/posterior.hpp"
#include "epifield/transforms.hpp"
#include "epifield/vi.hpp"

namespace epifield {

struct AmcmcConfig {
  int n_total = 20000;
  /// Negative means half of n_total.
  int burn_in = -1;
  int thin = 10;
  int adapt_start = 1000;
  /// Proposal scale factor; 0 selects 2.38^2 / d.
  double scale = 0.0;
  double regularization = 1e-8;
  /// Proposal standard deviation used before adaptation starts.
  double initial_proposal_sd = 0.05;
  /// Per-coordinate proposal standard deviations before adaptation; overrides initial_proposal_sd when set.
  Eigen::VectorXd initial_proposal_scales;
  std::uint64_t seed = 7;

  int resolved_burn_in() const { return burn_in < 0 ? n_total / 2 : burn_in; }
};

struct ChainState {
  Eigen::MatrixXd samples;  // kept draws, one per row
  Eigen::VectorXd log_posts;
  double acceptance_rate = 0.0;  // over post-burn-in iterations
  Eigen::MatrixXd proposal_cov;
};

/// Adaptive Metropolis (Haario et al.) started at `start`.
ChainState run_amcmc(const LogDensity& target, const Eigen::VectorXd& start, const AmcmcConfig& config);

/// Independent chains with seeds config.seed + c, run concurrently.
std::vector<ChainState> run_amcmc_chains(const LogDensity& target, const std::vector<Eigen::VectorXd>& starts,
                                         const AmcmcConfig& config, std::size_t threads = 0);

struct MarginalGap {
  double mcmc_mean = 0.0;
  double mcmc_sd = 0.0;
  double vi_mean = 0.0;
  double vi_sd = 0.0;
  double mean_gap_in_mcmc_sd = 0.0;
};

struct ParameterComparison {
  std::string name;
  MarginalGap unconstrained;  // VI moments are the analytic (mu, sigma)
  MarginalGap constrained;    // VI moments from push-forward samples
};

std::vector<ParameterComparison> compare_posteriors(const ChainState& chain, const VariationalState& vi,
                                                    const std::vector<std::string>& names,
                                                    const TransformOptions& transforms = {},
                                                    int vi_samples = 4000, std::uint64_t seed = 11);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

/// Constrained-space marginal summaries of the kept draws.
std::vector<ParameterSummary> summarize_chain(const ChainState& chain, const std::vector<std::string>& names,
                                              const TransformOptions& transforms = {});

}  // namespace epifield
