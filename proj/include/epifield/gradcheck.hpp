#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "epifield/posterior.hpp"

namespace epifield {

/// Central differences with step h * max(1, |x_i|).
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h = 1e-5);

/// |a - b| / max(|a|, |b|, floor)
double relative_error(double analytic, double numeric, double floor = 1e-8);
double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double floor = 1e-8);

struct GradcheckReport {
  double log_likelihood = 0.0;  // worst slot, unconstrained coordinates
  double posterior = 0.0;
  double elbo = 0.0;            // common random numbers, over (mu, rho)
  Eigen::VectorXd log_likelihood_slots;
};

/// Compares analytic gradients with central differences at `xhat`.
GradcheckReport gradient_check(const ModelContext& context, const Eigen::VectorXd& xhat, std::uint64_t seed,
                               int elbo_samples = 8, double elbo_scale = 0.05);

}  // namespace epifield
