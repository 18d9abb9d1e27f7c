#include "epifield/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace epifield {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_shapes(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted,
                  const RegionGraph& graph) {
  if (observed.rows() != predicted.rows() || observed.cols() != predicted.cols()) {
    throw std::invalid_argument("log_likelihood: observed is " + std::to_string(observed.rows()) + "x" +
                                std::to_string(observed.cols()) + " but predicted is " +
                                std::to_string(predicted.rows()) + "x" + std::to_string(predicted.cols()));
  }
  if (static_cast<std::size_t>(observed.cols()) != graph.size()) {
    throw std::invalid_argument("log_likelihood: column count does not match region count");
  }
}

}  // namespace

Eigen::MatrixXd build_precision(const RegionGraph& graph, double lambda, double ridge) {
  Eigen::MatrixXd p = -lambda * graph.adjacency();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, i) = std::max(graph.degrees()[i], ridge);
  return p;
}

GmrfTerm GmrfTerm::build(const RegionGraph& graph, double lambda) {
  GmrfTerm term;
  term.precision = build_precision(graph, lambda);
  Eigen::LLT<Eigen::MatrixXd> llt(term.precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("GMRF precision D - lambda W is not positive definite (lambda = " +
                         std::to_string(lambda) + ")");
  }
  const auto n = term.precision.rows();
  term.covariance = llt.solve(Eigen::MatrixXd::Identity(n, n));
  term.covariance = 0.5 * (term.covariance + term.covariance.transpose());
  term.covariance_dlambda = term.covariance * graph.adjacency() * term.covariance;
  return term;
}

CovarianceFactor::CovarianceFactor(Eigen::MatrixXd sigma) : sigma_(std::move(sigma)), llt_(sigma_) {
  if (llt_.info() != Eigen::Success) throw NumericalError("noise covariance is not positive definite");
  const Eigen::VectorXd diag = llt_.matrixLLT().diagonal();
  logdet_ = 2.0 * diag.array().log().sum();
  if (!std::isfinite(logdet_)) throw NumericalError("noise covariance has a non-finite log-determinant");
}

Eigen::MatrixXd CovarianceFactor::inverse() const {
  return llt_.solve(Eigen::MatrixXd::Identity(sigma_.rows(), sigma_.cols()));
}

double CovarianceFactor::log_density(const Eigen::VectorXd& residual) const {
  const Eigen::VectorXd half = llt_.matrixL().solve(residual);
  return -0.5 * static_cast<double>(residual.size()) * kLog2Pi - 0.5 * logdet_ - 0.5 * half.squaredNorm();
}

Eigen::MatrixXd noise_covariance(const GmrfTerm& gmrf, const NoiseParams& eta, const Eigen::VectorXd& y_pred) {
  Eigen::MatrixXd sigma = eta.tau * gmrf.covariance;
  for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
    const double s = eta.sigma_a + eta.sigma_m * y_pred[r];
    sigma(r, r) += s * s;
  }
  return sigma;
}

Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& sigma) {
  if (!sigma.allFinite()) throw NumericalError("covariance has non-finite entries");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale) throw NumericalError("covariance is not positive semi-definite");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

CovarianceFactor build_covariance(const GmrfTerm& gmrf, const NoiseParams& eta,
                                  const Eigen::VectorXd& y_pred) {
  return CovarianceFactor(noise_covariance(gmrf, eta, y_pred));
}

CovarianceFactor build_covariance(const RegionGraph& graph, const NoiseParams& eta,
                                  const Eigen::VectorXd& y_pred) {
  return build_covariance(GmrfTerm::build(graph, eta.lambda), eta, y_pred);
}

double log_likelihood(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted,
                      const RegionGraph& graph, const NoiseParams& eta) {
  check_shapes(observed, predicted, graph);
  const GmrfTerm gmrf = GmrfTerm::build(graph, eta.lambda);
  double total = 0.0;
  for (Eigen::Index i = 0; i < observed.rows(); ++i) {
    const Eigen::VectorXd y = predicted.row(i).transpose();
    const CovarianceFactor factor = build_covariance(gmrf, eta, y);
    total += factor.log_density(observed.row(i).transpose() - y);
  }
  return total;
}

// With M = (alpha alpha' - Sigma^-1)/2 and alpha = Sigma^-1 r, the differential of the
// day's log-density is tr(M dSigma) + alpha' dy. dSigma is assembled from
// Sigma = tau P^-1 + diag(sigma_a + sigma_m y)^2 with P = D - lambda W.
LikelihoodTerms log_likelihood_terms(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted,
                                     const RegionGraph& graph, const NoiseParams& eta) {
  check_shapes(observed, predicted, graph);
  const GmrfTerm gmrf = GmrfTerm::build(graph, eta.lambda);
  const Eigen::Index days = observed.rows();
  const Eigen::Index R = observed.cols();
  LikelihoodTerms out;
  out.d_predicted.setZero(days, R);
  for (Eigen::Index i = 0; i < days; ++i) {
    const Eigen::VectorXd y = predicted.row(i).transpose();
    const CovarianceFactor factor = build_covariance(gmrf, eta, y);
    const Eigen::VectorXd residual = observed.row(i).transpose() - y;
    const Eigen::VectorXd alpha = factor.solve(residual);
    out.value += -0.5 * static_cast<double>(R) * kLog2Pi - 0.5 * factor.logdet() - 0.5 * residual.dot(alpha);

    Eigen::MatrixXd m = alpha * alpha.transpose() - factor.inverse();
    m *= 0.5;
    out.d_noise[kSlotTau] += (m.array() * gmrf.covariance.array()).sum();
    out.d_noise[kSlotLambda] += eta.tau * (m.array() * gmrf.covariance_dlambda.array()).sum();
    for (Eigen::Index r = 0; r < R; ++r) {
      const double s = eta.sigma_a + eta.sigma_m * y[r];
      const double dm = 2.0 * s * m(r, r);
      out.d_noise[kSlotSigmaA] += dm;
      out.d_noise[kSlotSigmaM] += dm * y[r];
      out.d_predicted(i, r) = alpha[r] + eta.sigma_m * dm;
    }
  }
  return out;
}

FieldPrediction predict_field(const ConvolutionModel& model, const ParamVector& params,
                              std::span<const double> days, bool with_gradient) {
  const auto n_days = static_cast<Eigen::Index>(days.size());
  const auto R = static_cast<Eigen::Index>(params.region_count());
  FieldPrediction out;
  out.counts.resize(n_days, R);
  if (with_gradient) out.gradients.reserve(params.region_count());
  for (Eigen::Index r = 0; r < R; ++r) {
    const RegionParams& p = params.regions[static_cast<std::size_t>(r)];
    if (with_gradient) {
      DailyPrediction pred = model.predict_with_gradient(p, days);
      out.counts.col(r) = pred.counts;
      out.gradients.push_back(std::move(pred.gradient));
    } else {
      out.counts.col(r) = model.predict(p, days);
    }
  }
  return out;
}

LikelihoodGradient log_likelihood_grad(const Eigen::MatrixXd& observed, std::span<const double> days,
                                       const ParamVector& params, const ConvolutionModel& model,
                                       const RegionGraph& graph) {
  if (static_cast<std::size_t>(observed.rows()) != days.size()) {
    throw std::invalid_argument("log_likelihood_grad: day grid does not match observation rows");
  }
  const FieldPrediction field = predict_field(model, params, days, true);
  const LikelihoodTerms terms = log_likelihood_terms(observed, field.counts, graph, params.noise);
  LikelihoodGradient out;
  out.value = terms.value;
  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.dimension()));
  const std::size_t R = params.region_count();
  for (std::size_t r = 0; r < R; ++r) {
    const Eigen::Vector4d g = field.gradients[r].transpose() * terms.d_predicted.col(static_cast<Eigen::Index>(r));
    out.gradient.segment<4>(region_slot(r, 0)) = g;
  }
  out.gradient.segment<4>(noise_slot(R, 0)) = terms.d_noise;
  return out;
}

}  // namespace epifield
