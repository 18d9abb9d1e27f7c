#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "epifield/errors.hpp"
#include "epifield/params.hpp"
#include "epifield/posterior.hpp"

namespace epifield {

/// Mean-field Gaussian over unconstrained coordinates; scales are softplus(rho).
struct VariationalState {
  Eigen::VectorXd mu;
  Eigen::VectorXd rho;

  Eigen::Index dimension() const { return mu.size(); }
  Eigen::VectorXd sigma() const;
  /// Shared scale for every slot.
  static VariationalState around(const Eigen::VectorXd& mean, double scale);

  bool operator==(const VariationalState& other) const { return mu == other.mu && rho == other.rho; }
};

/// Sum of the per-slot Gaussian entropies, 0.5 log(2 pi e sigma^2).
double gaussian_entropy(const Eigen::VectorXd& sigma);

struct ElboTrace {
  std::vector<int> iteration;
  std::vector<double> elbo;
  std::vector<double> grad_norm;
  std::vector<double> seconds;
  std::vector<int> n_samples;

  std::size_t size() const { return iteration.size(); }
  void push(int iter, double value, double norm, double wall, int samples);
};

struct OptimizerConfig {
  double step_size = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  int max_iters = 5000;
  int n_samples = 200;
  std::uint64_t seed = 20200601;
  /// Stop once the mean gradient norm over the last `tolerance_window` iterations falls below this; 0 disables.
  double grad_tolerance = 0.0;
  int tolerance_window = 100;
  double initial_scale = 0.01;
  bool include_jacobian_entropy = true;
  std::size_t threads = 0;

  void validate() const;
};

/// n x d standard normals; row s depends only on (seed, iteration, s).
Eigen::MatrixXd sample_epsilon(int n, Eigen::Index d, std::uint64_t seed, std::uint64_t iteration = 0);

/// Objective minimized by the optimizer: -H[q] - mean_s log p(mu + sigma * eps_s).
double elbo_estimate(const VariationalState& state, const LogDensity& target, const Eigen::MatrixXd& eps,
                     std::size_t threads = 1);
double elbo_estimate(const VariationalState& state, const LogDensity& target, int n_samples,
                     std::uint64_t seed, std::uint64_t iteration = 0, std::size_t threads = 1);

struct ElboGradient {
  double elbo = 0.0;
  Eigen::VectorXd d_mu;
  Eigen::VectorXd d_rho;

  double norm() const { return std::sqrt(d_mu.squaredNorm() + d_rho.squaredNorm()); }
};

/// Reparametrization estimator of the objective's gradient, using target gradients.
ElboGradient elbo_grad_reparam(const VariationalState& state, const LogDensity& target, const Eigen::MatrixXd& eps,
                               std::size_t threads = 1);
ElboGradient elbo_grad_reparam(const VariationalState& state, const LogDensity& target, int n_samples,
                               std::uint64_t seed, std::uint64_t iteration = 0, std::size_t threads = 1);

/// Score-function estimator; uses target values only.
ElboGradient elbo_grad_score(const VariationalState& state, const LogDensity& target, const Eigen::MatrixXd& eps,
                             std::size_t threads = 1);
ElboGradient elbo_grad_score(const VariationalState& state, const LogDensity& target, int n_samples,
                             std::uint64_t seed, std::uint64_t iteration = 0, std::size_t threads = 1);

/// First and second moment ADAM steps for minimization.
class Adam {
 public:
  Adam(Eigen::Index dimension, double beta1, double beta2, double eps);
  /// Returns the update to add to the parameters.
  Eigen::VectorXd step(const Eigen::VectorXd& gradient, double step_size);
  int steps_taken() const { return t_; }

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  double beta1_;
  double beta2_;
  double eps_;
  int t_ = 0;
};

/// Default starting point for the fit window of `context`.
ParamVector default_initial_guess(const ModelContext& context);

struct MleConfig {
  int adam_iters = 300;
  double adam_step = 0.05;
  int lbfgs_iters = 1000;
  /// Target for the scaled gradient norm at the returned point.
  double tolerance = 1e-3;
};

struct MleResult {
  ParamVector params;
  Eigen::VectorXd xhat;
  double objective = 0.0;          // log-likelihood + log-prior
  double scaled_grad_norm = 0.0;
  std::vector<double> trace;       // objective per iteration (warm-up, then quasi-Newton)
  bool converged = false;
};

/// max_i |g_i| max(1, |x_i|) / max(1, |f|)
double scaled_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, double value);

/// Maximizes log-likelihood + log-prior over the unconstrained coordinates.
MleResult mle_fit(const ParamVector& initial, const ModelContext& context, const MleConfig& config = {});

class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, ElboTrace trace) : NumericalError(what), trace_(std::move(trace)) {}
  const ElboTrace& trace() const { return trace_; }

 private:
  ElboTrace trace_;
};

struct VariationalFit {
  VariationalState state;
  ElboTrace trace;
  MleResult mle;
};

/// ADAM on the reparametrized objective, started at `start`.
VariationalFit optimize_elbo(const VariationalState& start, const LogDensity& target, const OptimizerConfig& config);

/// MLE initialization followed by ADAM on the reparametrized objective.
VariationalFit fit_mfvi(const ModelContext& context, const OptimizerConfig& config, const MleConfig& mle = {});
VariationalFit fit_mfvi(const ModelContext& context, const ParamVector& initial, const OptimizerConfig& config,
                        const MleConfig& mle = {});

}  // namespace epifield
