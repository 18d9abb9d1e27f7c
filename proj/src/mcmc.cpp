#include "epifield/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

#include "epifield/errors.hpp"
#include "epifield/parallel.hpp"
#include "epifield/random.hpp"
#include "epifield/stats.hpp"

namespace epifield {

namespace {

constexpr Eigen::Index kRecommendedMaxDimension = 16;

/// Running mean and covariance of the chain history.
class RunningMoments {
 public:
  explicit RunningMoments(Eigen::Index d) : mean_(Eigen::VectorXd::Zero(d)), scatter_(Eigen::MatrixXd::Zero(d, d)) {}

  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    scatter_ += delta * (x - mean_).transpose();
  }
  Eigen::MatrixXd covariance() const {
    return n_ > 1 ? Eigen::MatrixXd(scatter_ / static_cast<double>(n_ - 1)) : Eigen::MatrixXd(scatter_);
  }
  long count() const { return n_; }

 private:
  long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
};

Eigen::MatrixXd column_values(const Eigen::MatrixXd& samples, const TransformOptions& transforms) {
  const auto layout = transform_layout(regions_for_dimension(samples.cols()), transforms);
  Eigen::MatrixXd out(samples.rows(), samples.cols());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    for (Eigen::Index i = 0; i < samples.rows(); ++i) out(i, j) = layout[j].forward(samples(i, j));
  }
  return out;
}

MarginalGap gap(double mcmc_mean, double mcmc_sd, double vi_mean, double vi_sd) {
  MarginalGap g{mcmc_mean, mcmc_sd, vi_mean, vi_sd, 0.0};
  g.mean_gap_in_mcmc_sd = mcmc_sd > 0.0 ? std::abs(vi_mean - mcmc_mean) / mcmc_sd
                                        : (vi_mean == mcmc_mean ? 0.0 : INFINITY);
  return g;
}

}  // namespace

ChainState run_amcmc(const LogDensity& target, const Eigen::VectorXd& start, const AmcmcConfig& config) {
  const Eigen::Index d = target.dimension();
  if (start.size() != d) throw std::invalid_argument("run_amcmc: start has the wrong dimension");
  if (config.n_total < 1 || config.thin < 1) throw std::invalid_argument("run_amcmc: n_total and thin must be >= 1");
  const int burn_in = config.resolved_burn_in();
  if (burn_in < 0 || burn_in >= config.n_total) throw std::invalid_argument("run_amcmc: burn_in must be < n_total");
  if (d > kRecommendedMaxDimension) {
    std::cerr << "warning: adaptive Metropolis on " << d << " dimensions will mix slowly\n";
  }

  double current_lp = target.log_density(start);
  if (!std::isfinite(current_lp)) throw NumericalError("run_amcmc: log-posterior is not finite at the initial point");

  const double scale = config.scale > 0.0 ? config.scale : 2.38 * 2.38 / static_cast<double>(d);
  const Eigen::MatrixXd ridge = config.regularization * Eigen::MatrixXd::Identity(d, d);
  if (config.initial_proposal_scales.size() != 0 &&
      (config.initial_proposal_scales.size() != d || !(config.initial_proposal_scales.array() > 0.0).all())) {
    throw std::invalid_argument("run_amcmc: initial_proposal_scales must be positive with one entry per coordinate");
  }
  Eigen::MatrixXd proposal_cov =
      config.initial_proposal_scales.size() == d
          ? Eigen::MatrixXd(config.initial_proposal_scales.cwiseAbs2().asDiagonal())
          : Eigen::MatrixXd(config.initial_proposal_sd * config.initial_proposal_sd * Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd proposal_root = proposal_cov.llt().matrixL();

  const int kept = (config.n_total - burn_in) / config.thin;
  ChainState chain;
  chain.samples.resize(kept, d);
  chain.log_posts.resize(kept);

  auto engine = make_engine(config.seed, 0, 0);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  RunningMoments history(d);
  Eigen::VectorXd current = start;
  Eigen::VectorXd z(d);
  long accepted = 0;
  int row = 0;

  for (int it = 0; it < config.n_total; ++it) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(engine);
    const Eigen::VectorXd proposal = current + proposal_root * z;
    const double lp = target.log_density(proposal);
    const double u = uniform(engine);
    if (std::isfinite(lp) && std::log(u) < lp - current_lp) {
      current = proposal;
      current_lp = lp;
      if (it >= burn_in) ++accepted;
    }
    history.add(current);

    if (it + 1 >= config.adapt_start && history.count() > 1) {
      const Eigen::MatrixXd candidate = scale * (history.covariance() + ridge);
      Eigen::LLT<Eigen::MatrixXd> llt(candidate);
      if (llt.info() == Eigen::Success) {
        proposal_cov = candidate;
        proposal_root = llt.matrixL();
      }
    }

    const int after = it - burn_in;
    if (after >= 0 && (after + 1) % config.thin == 0 && row < kept) {
      chain.samples.row(row) = current.transpose();
      chain.log_posts[row] = current_lp;
      ++row;
    }
  }
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(config.n_total - burn_in);
  chain.proposal_cov = proposal_cov;
  return chain;
}

std::vector<ChainState> run_amcmc_chains(const LogDensity& target, const std::vector<Eigen::VectorXd>& starts,
                                         const AmcmcConfig& config, std::size_t threads) {
  std::vector<ChainState> chains(starts.size());
  parallel_for(starts.size(), threads, [&](std::size_t c) {
    AmcmcConfig local = config;
    local.seed = config.seed + c;
    chains[c] = run_amcmc(target, starts[c], local);
  });
  return chains;
}

std::vector<ParameterComparison> compare_posteriors(const ChainState& chain, const VariationalState& vi,
                                                    const std::vector<std::string>& names,
                                                    const TransformOptions& transforms, int vi_samples,
                                                    std::uint64_t seed) {
  const Eigen::Index d = chain.samples.cols();
  if (vi.dimension() != d || static_cast<Eigen::Index>(names.size()) != d) {
    throw std::invalid_argument("compare_posteriors: layouts do not match");
  }
  const Eigen::VectorXd sigma = vi.sigma();
  const Eigen::MatrixXd eps = sample_epsilon(vi_samples, d, seed);
  const Eigen::MatrixXd vi_draws = (eps * sigma.asDiagonal()).rowwise() + vi.mu.transpose();
  const Eigen::MatrixXd chain_constrained = column_values(chain.samples, transforms);
  const Eigen::MatrixXd vi_constrained = column_values(vi_draws, transforms);

  auto moments = [](const Eigen::VectorXd& col) {
    std::vector<double> v(col.data(), col.data() + col.size());
    return std::pair{mean(v), std::sqrt(sample_variance(v))};
  };

  std::vector<ParameterComparison> report;
  for (Eigen::Index j = 0; j < d; ++j) {
    ParameterComparison row;
    row.name = names[j];
    const auto [cm, cs] = moments(chain.samples.col(j));
    row.unconstrained = gap(cm, cs, vi.mu[j], sigma[j]);
    const auto [ccm, ccs] = moments(chain_constrained.col(j));
    const auto [vcm, vcs] = moments(vi_constrained.col(j));
    row.constrained = gap(ccm, ccs, vcm, vcs);
    report.push_back(row);
  }
  return report;
}

std::vector<ParameterSummary> summarize_chain(const ChainState& chain, const std::vector<std::string>& names,
                                              const TransformOptions& transforms) {
  if (static_cast<Eigen::Index>(names.size()) != chain.samples.cols()) {
    throw std::invalid_argument("summarize_chain: names do not match the chain dimension");
  }
  const Eigen::MatrixXd values = column_values(chain.samples, transforms);
  std::vector<ParameterSummary> out;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    std::vector<double> v(values.rows());
    for (Eigen::Index i = 0; i < values.rows(); ++i) v[i] = values(i, j);
    ParameterSummary s;
    s.name = names[j];
    s.mean = mean(v);
    s.sd = std::sqrt(sample_variance(v));
    std::sort(v.begin(), v.end());
    s.q05 = quantile_sorted(v, 0.05);
    s.q50 = quantile_sorted(v, 0.50);
    s.q95 = quantile_sorted(v, 0.95);
    out.push_back(s);
  }
  return out;
}

}  // namespace epifield
