#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "epifield/mcmc.hpp"
#include "epifield/posterior.hpp"
#include "epifield/vi.hpp"

namespace epifield {

/// Posterior-predictive trajectories over a day axis; every matrix is days x regions.
struct ForecastEnsemble {
  std::vector<double> days;
  std::vector<Eigen::MatrixXd> samples;      // with observation noise
  std::vector<Eigen::MatrixXd> pushforward;  // noise-free model predictions
  Eigen::MatrixXd p05, p25, p50, p75, p95;
  Eigen::MatrixXd pf_p50;

  std::size_t draws() const { return samples.size(); }
  Eigen::Index day_count() const { return static_cast<Eigen::Index>(days.size()); }
  Eigen::Index region_count() const { return samples.empty() ? 0 : samples.front().cols(); }

  /// Sorted noisy draws for one cell.
  std::vector<double> cell(Eigen::Index day, Eigen::Index region) const;
  /// Empirical percentile of the noisy draws, per cell.
  Eigen::MatrixXd percentile(double level) const;
  Eigen::MatrixXd pushforward_percentile(double level) const;
  void compute_bands();
};

/// Draws one constrained parameter set.
using ParameterSampler = std::function<ParamVector(std::mt19937_64&)>;

ParameterSampler sampler_from_state(const VariationalState& state, const TransformOptions& transforms = {});
/// Uniform draws from the kept rows of a chain.
ParameterSampler sampler_from_chain(const ChainState& chain, const TransformOptions& transforms = {});
ParameterSampler point_mass(const ParamVector& params);

inline constexpr int kMaxDrawRetries = 10;

/// J noisy trajectories y_pred(theta_j) + eps, eps ~ N(0, Sigma_i(theta_j)) per day.
ForecastEnsemble sample_ppt(const ParameterSampler& sampler, const ConvolutionModel& model, const RegionGraph& graph,
                            const std::vector<double>& days, int draws, std::uint64_t seed, std::size_t threads = 0);

/// CRPS of an empirical ensemble against one observation.
double crps_ensemble(std::vector<double> members, double observed);

struct CrpsResult {
  Eigen::MatrixXd per_day;     // NaN where not scored
  Eigen::VectorXd per_region;  // mean over scored days
};

/// Scores every cell of `observed` (aligned with ensemble.days) that is not NaN.
CrpsResult crps(const ForecastEnsemble& ensemble, const Eigen::MatrixXd& observed);

struct CrpsScaling {
  Eigen::VectorXd ratio;  // C_r / T_r, NaN for excluded regions
  std::vector<Eigen::Index> excluded;
  double slope = 0.0;
  double intercept = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
};

/// Least squares of log(C/T) on log T plus quartiles of C/T; regions with T <= 0 are excluded.
CrpsScaling crps_ratio_and_fit(const Eigen::VectorXd& crps_per_region, const Eigen::VectorXd& totals);

}  // namespace epifield
