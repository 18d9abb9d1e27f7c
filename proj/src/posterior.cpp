#include "epifield/posterior.hpp"

#include <cmath>
#include <limits>

#include "epifield/errors.hpp"
#include "epifield/likelihood.hpp"

namespace epifield {

PosteriorDensity::PosteriorDensity(const ModelContext& context, bool include_jacobian)
    : context_(context), include_jacobian_(include_jacobian) {
  if (static_cast<std::size_t>(context_.observed.cols()) != context_.graph.size() ||
      static_cast<std::size_t>(context_.observed.rows()) != context_.days.size()) {
    throw std::invalid_argument("PosteriorDensity: observations do not match graph or day grid");
  }
}

PosteriorTerms PosteriorDensity::terms(const Eigen::VectorXd& x) const {
  const ParamVector theta = from_unconstrained(x, context_.transforms);
  const FieldPrediction field = predict_field(context_.model, theta, context_.days, false);
  PosteriorTerms out;
  out.log_likelihood = log_likelihood(context_.observed, field.counts, context_.graph, theta.noise);
  out.log_prior = log_prior(theta, context_.prior).value;
  out.log_jacobian = log_jacobian(x, context_.transforms).log_det;
  return out;
}

double PosteriorDensity::log_density(const Eigen::VectorXd& x) const {
  try {
    const PosteriorTerms t = terms(x);
    const double total = t.log_likelihood + t.log_prior + (include_jacobian_ ? t.log_jacobian : 0.0);
    return std::isfinite(total) ? total : -std::numeric_limits<double>::infinity();
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

double PosteriorDensity::log_density_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  grad.setZero(x.size());
  try {
    const ParamVector theta = from_unconstrained(x, context_.transforms);
    const LikelihoodGradient lik =
        log_likelihood_grad(context_.observed, context_.days, theta, context_.model, context_.graph);
    const PriorValue prior = log_prior(theta, context_.prior);
    const JacobianTerms jac = log_jacobian(x, context_.transforms);
    double total = lik.value + prior.value;
    grad = (lik.gradient + prior.gradient).cwiseProduct(jac.derivative);
    if (include_jacobian_) {
      total += jac.log_det;
      grad += jac.log_det_gradient;
    }
    if (!std::isfinite(total) || !grad.allFinite()) {
      grad.setZero(x.size());
      return -std::numeric_limits<double>::infinity();
    }
    return total;
  } catch (const NumericalError&) {
    grad.setZero(x.size());
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace epifield
