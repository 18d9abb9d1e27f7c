#include "epifield/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "epifield/likelihood.hpp"
#include "epifield/vi.hpp"

namespace epifield {

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd plus = x;
    Eigen::VectorXd minus = x;
    plus[i] += step;
    minus[i] -= step;
    out[i] = (f(plus) - f(minus)) / (2.0 * step);
  }
  return out;
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  return worst;
}

GradcheckReport gradient_check(const ModelContext& context, const Eigen::VectorXd& xhat, std::uint64_t seed,
                               int elbo_samples, double elbo_scale) {
  GradcheckReport report;
  const TransformOptions& transforms = context.transforms;

  auto loglik = [&](const Eigen::VectorXd& x) {
    const ParamVector theta = from_unconstrained(x, transforms);
    const Eigen::MatrixXd pred = predict_field(context.model, theta, context.days, false).counts;
    return log_likelihood(context.observed, pred, context.graph, theta.noise);
  };
  const ParamVector theta = from_unconstrained(xhat, transforms);
  const LikelihoodGradient lik = log_likelihood_grad(context.observed, context.days, theta, context.model, context.graph);
  const Eigen::VectorXd analytic = lik.gradient.cwiseProduct(log_jacobian(xhat, transforms).derivative);
  const Eigen::VectorXd numeric = central_difference(loglik, xhat);
  report.log_likelihood_slots.resize(xhat.size());
  for (Eigen::Index i = 0; i < xhat.size(); ++i) report.log_likelihood_slots[i] = relative_error(analytic[i], numeric[i]);
  report.log_likelihood = report.log_likelihood_slots.maxCoeff();

  const PosteriorDensity posterior(context, true);
  Eigen::VectorXd post_grad;
  posterior.log_density_gradient(xhat, post_grad);
  report.posterior = max_relative_error(
      post_grad, central_difference([&](const Eigen::VectorXd& x) { return posterior.log_density(x); }, xhat));

  const VariationalState state = VariationalState::around(xhat, elbo_scale);
  const Eigen::MatrixXd eps = sample_epsilon(elbo_samples, xhat.size(), seed);
  const ElboGradient g = elbo_grad_reparam(state, posterior, eps);
  const Eigen::Index d = xhat.size();
  Eigen::VectorXd joint(2 * d);
  joint << state.mu, state.rho;
  auto elbo_at = [&](const Eigen::VectorXd& v) {
    VariationalState s{v.head(d), v.tail(d)};
    return elbo_estimate(s, posterior, eps);
  };
  Eigen::VectorXd analytic_elbo(2 * d);
  analytic_elbo << g.d_mu, g.d_rho;
  report.elbo = max_relative_error(analytic_elbo, central_difference(elbo_at, joint));
  return report;
}

}  // namespace epifield
