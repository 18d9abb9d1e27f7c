#include "epifield/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "epifield/errors.hpp"
#include "epifield/likelihood.hpp"
#include "epifield/parallel.hpp"
#include "epifield/random.hpp"
#include "epifield/stats.hpp"

namespace epifield {

namespace {

Eigen::MatrixXd cellwise_percentile(const std::vector<Eigen::MatrixXd>& draws, double level) {
  if (draws.empty()) throw std::invalid_argument("percentile of an empty ensemble");
  const Eigen::Index rows = draws.front().rows();
  const Eigen::Index cols = draws.front().cols();
  Eigen::MatrixXd out(rows, cols);
  std::vector<double> values(draws.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index r = 0; r < cols; ++r) {
      for (std::size_t j = 0; j < draws.size(); ++j) values[j] = draws[j](i, r);
      std::sort(values.begin(), values.end());
      out(i, r) = quantile_sorted(values, level);
    }
  }
  return out;
}

}  // namespace

std::vector<double> ForecastEnsemble::cell(Eigen::Index day, Eigen::Index region) const {
  std::vector<double> values(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) values[j] = samples[j](day, region);
  std::sort(values.begin(), values.end());
  return values;
}

Eigen::MatrixXd ForecastEnsemble::percentile(double level) const { return cellwise_percentile(samples, level); }

Eigen::MatrixXd ForecastEnsemble::pushforward_percentile(double level) const {
  return cellwise_percentile(pushforward, level);
}

void ForecastEnsemble::compute_bands() {
  p05 = percentile(0.05);
  p25 = percentile(0.25);
  p50 = percentile(0.50);
  p75 = percentile(0.75);
  p95 = percentile(0.95);
  pf_p50 = pushforward_percentile(0.50);
}

ParameterSampler sampler_from_state(const VariationalState& state, const TransformOptions& transforms) {
  const Eigen::VectorXd sigma = state.sigma();
  return [mu = state.mu, sigma, transforms](std::mt19937_64& engine) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd x(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) x[i] = mu[i] + sigma[i] * normal(engine);
    return from_unconstrained(x, transforms);
  };
}

ParameterSampler sampler_from_chain(const ChainState& chain, const TransformOptions& transforms) {
  if (chain.samples.rows() == 0) throw std::invalid_argument("sampler_from_chain: chain has no kept draws");
  return [samples = chain.samples, transforms](std::mt19937_64& engine) {
    std::uniform_int_distribution<Eigen::Index> pick(0, samples.rows() - 1);
    return from_unconstrained(samples.row(pick(engine)).transpose(), transforms);
  };
}

ParameterSampler point_mass(const ParamVector& params) {
  return [params](std::mt19937_64&) { return params; };
}

ForecastEnsemble sample_ppt(const ParameterSampler& sampler, const ConvolutionModel& model, const RegionGraph& graph,
                            const std::vector<double>& days, int draws, std::uint64_t seed, std::size_t threads) {
  if (draws < 2) throw std::invalid_argument("sample_ppt: need at least two draws");
  if (days.empty()) throw std::invalid_argument("sample_ppt: empty day axis");
  ForecastEnsemble ensemble;
  ensemble.days = days;
  ensemble.samples.resize(draws);
  ensemble.pushforward.resize(draws);
  const auto n_days = static_cast<Eigen::Index>(days.size());
  const auto n_regions = static_cast<Eigen::Index>(graph.size());

  parallel_for(static_cast<std::size_t>(draws), threads, [&](std::size_t j) {
    for (int attempt = 0; attempt <= kMaxDrawRetries; ++attempt) {
      auto engine = make_engine(seed, j, static_cast<std::uint64_t>(attempt));
      try {
        const ParamVector theta = sampler(engine);
        if (theta.region_count() != graph.size()) throw std::invalid_argument("sampler returned wrong region count");
        const Eigen::MatrixXd mean = predict_field(model, theta, days, false).counts;
        const GmrfTerm gmrf = GmrfTerm::build(graph, theta.noise.lambda);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd noisy(n_days, n_regions);
        Eigen::VectorXd z(n_regions);
        for (Eigen::Index i = 0; i < n_days; ++i) {
          const Eigen::VectorXd y = mean.row(i).transpose();
          const Eigen::MatrixXd root = covariance_root(noise_covariance(gmrf, theta.noise, y));
          for (Eigen::Index r = 0; r < n_regions; ++r) z[r] = normal(engine);
          noisy.row(i) = (y + root * z).transpose();
        }
        if (!noisy.allFinite() || !mean.allFinite()) throw NumericalError("non-finite predictive draw");
        ensemble.samples[j] = std::move(noisy);
        ensemble.pushforward[j] = mean;
        return;
      } catch (const NumericalError& e) {
        if (attempt == kMaxDrawRetries) {
          throw NumericalError("sample_ppt: draw " + std::to_string(j) + " failed after " +
                               std::to_string(kMaxDrawRetries) + " retries: " + e.what());
        }
      }
    }
  });
  ensemble.compute_bands();
  return ensemble;
}

double crps_ensemble(std::vector<double> members, double observed) {
  if (members.empty()) throw std::invalid_argument("crps of an empty ensemble");
  std::sort(members.begin(), members.end());
  const double n = static_cast<double>(members.size());
  double abs_error = 0.0;
  double spread = 0.0;  // sum over ordered pairs j < k of (x_k - x_j)
  for (std::size_t i = 0; i < members.size(); ++i) {
    abs_error += std::abs(members[i] - observed);
    spread += members[i] * (2.0 * static_cast<double>(i) - (n - 1.0));
  }
  return abs_error / n - spread / (n * n);
}

CrpsResult crps(const ForecastEnsemble& ensemble, const Eigen::MatrixXd& observed) {
  if (observed.rows() != ensemble.day_count() || observed.cols() != ensemble.region_count()) {
    throw std::invalid_argument("crps: observations do not align with the ensemble");
  }
  CrpsResult result;
  result.per_day = Eigen::MatrixXd::Constant(observed.rows(), observed.cols(), std::numeric_limits<double>::quiet_NaN());
  result.per_region = Eigen::VectorXd::Constant(observed.cols(), std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index r = 0; r < observed.cols(); ++r) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < observed.rows(); ++i) {
      if (std::isnan(observed(i, r))) continue;
      result.per_day(i, r) = crps_ensemble(ensemble.cell(i, r), observed(i, r));
      sum += result.per_day(i, r);
      ++count;
    }
    if (count > 0) result.per_region[r] = sum / count;
  }
  return result;
}

CrpsScaling crps_ratio_and_fit(const Eigen::VectorXd& crps_per_region, const Eigen::VectorXd& totals) {
  if (crps_per_region.size() != totals.size()) throw std::invalid_argument("crps_ratio_and_fit: size mismatch");
  CrpsScaling out;
  out.ratio = Eigen::VectorXd::Constant(totals.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> log_total;
  std::vector<double> log_ratio;
  std::vector<double> ratios;
  for (Eigen::Index r = 0; r < totals.size(); ++r) {
    if (!(totals[r] > 0.0) || !(crps_per_region[r] > 0.0)) {
      out.excluded.push_back(r);
      std::cerr << "warning: region " << r << " excluded from the CRPS scaling fit (non-positive total or CRPS)\n";
      continue;
    }
    out.ratio[r] = crps_per_region[r] / totals[r];
    ratios.push_back(out.ratio[r]);
    log_total.push_back(std::log(totals[r]));
    log_ratio.push_back(std::log(out.ratio[r]));
  }
  if (ratios.empty()) return out;
  std::sort(ratios.begin(), ratios.end());
  out.q25 = quantile_sorted(ratios, 0.25);
  out.q50 = quantile_sorted(ratios, 0.50);
  out.q75 = quantile_sorted(ratios, 0.75);
  if (log_total.size() >= 2) {
    const LinearFit fit = least_squares_line(log_total, log_ratio);
    out.slope = fit.slope;
    out.intercept = fit.intercept;
  }
  return out;
}

}  // namespace epifield
