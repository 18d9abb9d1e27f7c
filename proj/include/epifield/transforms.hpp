#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epifield/model.hpp"
#include "epifield/params.hpp"

namespace epifield {

double softplus(double x);
double softplus_inverse(double y);
double logistic(double x);

struct TransformOptions {
  double eps_theta = kDefaultScaleFloor;
  double eps_lambda = 1e-3;
};

/// Monotone map from an unconstrained coordinate to a constrained parameter.
struct TransformSpec {
  enum class Kind { identity, exp, softplus_shifted, logistic_scaled };

  Kind kind = Kind::identity;
  double offset = 0.0;  // softplus_shifted: lower bound
  double upper = 1.0;   // logistic_scaled: upper bound

  double forward(double x) const;
  /// Throws std::domain_error outside the open image of `forward`.
  double inverse(double y) const;
  double derivative(double x) const;
  double log_derivative(double x) const;
  /// d/dx log f'(x)
  double log_derivative_grad(double x) const;
};

/// One transform per flattened slot, following the [m_1 ... m_R, eta] layout.
std::vector<TransformSpec> transform_layout(std::size_t n_regions, const TransformOptions& options = {});

Eigen::VectorXd to_unconstrained(const ParamVector& theta, const TransformOptions& options = {});
ParamVector from_unconstrained(const Eigen::VectorXd& xhat, const TransformOptions& options = {});

struct JacobianTerms {
  double log_det = 0.0;
  Eigen::VectorXd derivative;       // f_i'(xhat_i)
  Eigen::VectorXd log_det_gradient; // d/dxhat_i log f_i'(xhat_i)
};

JacobianTerms log_jacobian(const Eigen::VectorXd& xhat, const TransformOptions& options = {});

/// Gaussian prior on every t0; other parameters are flat on their constrained domain.
struct PriorSpec {
  double t0_mean = -10.0;
  double t0_sd = 30.0;
  /// Optional per-region overrides; empty means the shared values apply.
  std::vector<double> t0_means;
  std::vector<double> t0_sds;

  double mean_for(std::size_t region) const;
  double sd_for(std::size_t region) const;
};

struct PriorValue {
  double value = 0.0;
  Eigen::VectorXd gradient;  // w.r.t. constrained parameters
};

PriorValue log_prior(const ParamVector& theta, const PriorSpec& prior);

}  // namespace epifield
