#pragma once

#include <Eigen/Dense>
#include <span>

#include "epifield/errors.hpp"
#include "epifield/graph.hpp"
#include "epifield/model.hpp"
#include "epifield/params.hpp"

namespace epifield {

/// Degree floor used when factorizing P for regions without neighbours.
inline constexpr double kDegreeRidge = 1e-6;

/// P = D - lambda W, with degrees floored at `ridge`.
Eigen::MatrixXd build_precision(const RegionGraph& graph, double lambda, double ridge = kDegreeRidge);

/// Day-independent part of the noise covariance: P^-1 and its lambda derivative.
struct GmrfTerm {
  Eigen::MatrixXd precision;   // P
  Eigen::MatrixXd covariance;  // P^-1
  Eigen::MatrixXd covariance_dlambda;  // d(P^-1)/d(lambda) = P^-1 W P^-1

  static GmrfTerm build(const RegionGraph& graph, double lambda);
};

/// Sigma_i = tau P^-1 + diag(sigma_a + sigma_m y_i)^2 with its Cholesky factor.
class CovarianceFactor {
 public:
  explicit CovarianceFactor(Eigen::MatrixXd sigma);

  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::LLT<Eigen::MatrixXd>& cholesky() const { return llt_; }
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }
  double logdet() const { return logdet_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  Eigen::MatrixXd inverse() const;

  /// -R/2 log 2pi - logdet/2 - r' Sigma^-1 r / 2
  double log_density(const Eigen::VectorXd& residual) const;

 private:
  Eigen::MatrixXd sigma_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double logdet_ = 0.0;
};

/// Unfactored Sigma_i; may be singular when every noise scale is zero.
Eigen::MatrixXd noise_covariance(const GmrfTerm& gmrf, const NoiseParams& eta, const Eigen::VectorXd& y_pred);

/// Matrix S with S S' = sigma for symmetric positive semi-definite sigma; throws NumericalError otherwise.
Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& sigma);

CovarianceFactor build_covariance(const RegionGraph& graph, const NoiseParams& eta,
                                  const Eigen::VectorXd& y_pred);
CovarianceFactor build_covariance(const GmrfTerm& gmrf, const NoiseParams& eta,
                                  const Eigen::VectorXd& y_pred);

/// Gaussian log-likelihood summed over days; rows of the matrices are days, columns regions.
double log_likelihood(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted,
                      const RegionGraph& graph, const NoiseParams& eta);

/// Log-likelihood with its derivatives w.r.t. every predicted count and the noise parameters.
struct LikelihoodTerms {
  double value = 0.0;
  Eigen::MatrixXd d_predicted;  // days x regions
  Eigen::Vector4d d_noise = Eigen::Vector4d::Zero();  // tau, lambda, sigma_a, sigma_m
};

LikelihoodTerms log_likelihood_terms(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted,
                                     const RegionGraph& graph, const NoiseParams& eta);

/// Predictions for every region (days x regions), optionally with per-region sensitivities.
struct FieldPrediction {
  Eigen::MatrixXd counts;
  std::vector<Eigen::MatrixXd> gradients;  // per region, days x 4
};

FieldPrediction predict_field(const ConvolutionModel& model, const ParamVector& params,
                              std::span<const double> days, bool with_gradient);

struct LikelihoodGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;  // length 4R + 4, constrained parameters
};

/// Log-likelihood and its gradient over all constrained parameters, chaining the
/// per-day prediction sensitivities through d(loglik)/d(y).
LikelihoodGradient log_likelihood_grad(const Eigen::MatrixXd& observed, std::span<const double> days,
                                       const ParamVector& params, const ConvolutionModel& model,
                                       const RegionGraph& graph);

}  // namespace epifield
