#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "epifield/graph.hpp"
#include "epifield/io.hpp"
#include "epifield/model.hpp"
#include "epifield/params.hpp"
#include "epifield/posterior.hpp"
#include "epifield/synthetic.hpp"

namespace support {

using namespace epifield;

/// Independent closed-form lognormal CDF for the oracles below.
inline double lognormal_cdf(double t, double mu, double sigma) {
  if (t <= 0.0) return 0.0;
  return 0.5 * (1.0 + std::erf((std::log(t) - mu) / (sigma * std::sqrt(2.0))));
}

inline double gamma_pdf(double s, double k, double theta) {
  if (s <= 0.0) return 0.0;
  return std::exp((k - 1.0) * std::log(s) - s / theta - std::lgamma(k) - k * std::log(theta));
}

/// Trapezoid rule over [t0, t_i] with `nodes` points.
inline double trapezoid_day(const RegionParams& p, const IncubationParams& inc, double day, int nodes = 100000) {
  if (day <= p.t0) return 0.0;
  const double h = (day - p.t0) / (nodes - 1);
  double total = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double tau = p.t0 + j * h;
    const double w = (j == 0 || j == nodes - 1) ? 0.5 * h : h;
    const double kernel = lognormal_cdf(day - tau, inc.mu, inc.sigma) - lognormal_cdf(day - 1.0 - tau, inc.mu, inc.sigma);
    total += w * gamma_pdf(tau - p.t0, p.shape, p.scale) * kernel;
  }
  return p.n_total * total;
}

inline RegionParams random_region(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> t0(-20.0, 20.0);
  std::uniform_real_distribution<double> logn(std::log(100.0), std::log(20000.0));
  std::uniform_real_distribution<double> k(2.2, 6.0);
  std::uniform_real_distribution<double> theta(3.0, 15.0);
  return {t0(rng), std::exp(logn(rng)), k(rng), theta(rng)};
}

inline NoiseParams random_noise(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {0.5 + 4.0 * u(rng), 0.05 + 0.9 * u(rng), 0.5 + 2.0 * u(rng), 0.05 + 0.25 * u(rng)};
}

inline ParamVector random_params(std::mt19937_64& rng, std::size_t regions) {
  ParamVector p;
  for (std::size_t r = 0; r < regions; ++r) p.regions.push_back(random_region(rng));
  p.noise = random_noise(rng);
  return p;
}

/// Path graph a - b - c - ... with ids r0, r1, ...
inline RegionGraph path_graph(std::size_t n) {
  std::vector<RegionInfo> regions;
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    regions.push_back({"r" + std::to_string(i), "region " + std::to_string(i), 35.0 + 0.1 * i, -106.0 - 0.1 * i, 1e5});
    if (i > 0) edges.emplace_back("r" + std::to_string(i - 1), "r" + std::to_string(i));
  }
  return RegionGraph(regions, edges);
}

/// Dense multivariate normal log-pdf via an explicit inverse and determinant.
inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd r = x - mean;
  const double quad = r.dot(cov.inverse() * r);
  return -0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant()) -
         0.5 * quad;
}

/// Isotropic Gaussian target exp(-|x - mean|^2 / (2 sd^2)), unnormalized.
class GaussianTarget final : public LogDensity {
 public:
  GaussianTarget(Eigen::VectorXd mean, Eigen::VectorXd sd) : mean_(std::move(mean)), sd_(std::move(sd)) {}
  Eigen::Index dimension() const override { return mean_.size(); }
  double log_density(const Eigen::VectorXd& x) const override {
    return -0.5 * ((x - mean_).cwiseQuotient(sd_)).squaredNorm();
  }
  double log_density_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override {
    grad = -(x - mean_).cwiseQuotient(sd_.cwiseAbs2());
    return log_density(x);
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd sd_;
};

/// Constant log-density.
class ConstantTarget final : public LogDensity {
 public:
  ConstantTarget(Eigen::Index d, double value) : d_(d), value_(value) {}
  Eigen::Index dimension() const override { return d_; }
  double log_density(const Eigen::VectorXd&) const override { return value_; }
  double log_density_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override {
    grad = Eigen::VectorXd::Zero(x.size());
    return value_;
  }

 private:
  Eigen::Index d_;
  double value_;
};

inline RegionGraph load_fixture_graph(const std::string& dir) {
  return load_graph(dir + "/regions.csv", dir + "/edges.csv");
}

/// Fit-window context built from a noisy synthetic draw of `truth` on a path graph.
inline ModelContext synthetic_context(const ParamVector& truth, int n_days, std::uint64_t seed) {
  ModelContext context;
  context.graph = path_graph(truth.region_count());
  context.days = day_range(0.0, n_days);
  context.observed = generate_synthetic(truth, context.graph, context.model, context.days, seed).observed;
  return context;
}

/// Bernalillo-like single region; an isolated region's GMRF variance is tau / kDegreeRidge.
inline ParamVector one_region_truth() {
  ParamVector p;
  p.regions.push_back({-5.0, 8000.0, 3.0, 8.0});
  p.noise = {4e-6, 0.5, 1.0, 0.1};
  return p;
}

inline ParamVector two_region_truth() {
  ParamVector p = one_region_truth();
  p.regions.push_back({5.0, 2500.0, 3.5, 7.0});
  p.noise.tau = 4.0;
  return p;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace support
