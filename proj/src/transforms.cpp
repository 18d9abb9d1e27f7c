#include "epifield/transforms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace epifield {

namespace {
constexpr double kTail = 30.0;
}

double softplus(double x) {
  if (x > kTail) return x + std::exp(-x);
  if (x < -kTail) return std::exp(x);
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw std::domain_error("softplus_inverse: argument must be positive");
  if (y > kTail) return y + std::log(-std::expm1(-y));
  return std::log(std::expm1(y));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double TransformSpec::forward(double x) const {
  switch (kind) {
    case Kind::identity: return x;
    case Kind::exp: return std::exp(x);
    case Kind::softplus_shifted: return offset + softplus(x);
    case Kind::logistic_scaled: return upper * logistic(x);
  }
  return x;
}

double TransformSpec::inverse(double y) const {
  switch (kind) {
    case Kind::identity:
      if (!std::isfinite(y)) throw std::domain_error("identity transform: value must be finite");
      return y;
    case Kind::exp:
      if (!(y > 0.0) || !std::isfinite(y)) {
        throw std::domain_error("log transform: value " + std::to_string(y) + " not in (0, inf)");
      }
      return std::log(y);
    case Kind::softplus_shifted:
      if (!(y > offset) || !std::isfinite(y)) {
        throw std::domain_error("softplus transform: value " + std::to_string(y) + " not in (" +
                                std::to_string(offset) + ", inf)");
      }
      return softplus_inverse(y - offset);
    case Kind::logistic_scaled: {
      if (!(y > 0.0 && y < upper)) {
        throw std::domain_error("logistic transform: value " + std::to_string(y) + " not in (0, " +
                                std::to_string(upper) + ")");
      }
      const double p = y / upper;
      return std::log(p) - std::log1p(-p);
    }
  }
  return y;
}

double TransformSpec::derivative(double x) const {
  switch (kind) {
    case Kind::identity: return 1.0;
    case Kind::exp: return std::exp(x);
    case Kind::softplus_shifted: return logistic(x);
    case Kind::logistic_scaled: return upper * logistic(x) * logistic(-x);
  }
  return 1.0;
}

double TransformSpec::log_derivative(double x) const {
  switch (kind) {
    case Kind::identity: return 0.0;
    case Kind::exp: return x;
    case Kind::softplus_shifted: return -softplus(-x);
    case Kind::logistic_scaled: return std::log(upper) - softplus(-x) - softplus(x);
  }
  return 0.0;
}

double TransformSpec::log_derivative_grad(double x) const {
  switch (kind) {
    case Kind::identity: return 0.0;
    case Kind::exp: return 1.0;
    case Kind::softplus_shifted: return logistic(-x);
    case Kind::logistic_scaled: return logistic(-x) - logistic(x);
  }
  return 0.0;
}

std::vector<TransformSpec> transform_layout(std::size_t n_regions, const TransformOptions& options) {
  using Kind = TransformSpec::Kind;
  std::vector<TransformSpec> out;
  out.reserve(kParamsPerRegion * n_regions + kNoiseParams);
  for (std::size_t r = 0; r < n_regions; ++r) {
    out.push_back({Kind::identity});
    out.push_back({Kind::exp});
    out.push_back({Kind::softplus_shifted, kMinShape});
    out.push_back({Kind::softplus_shifted, options.eps_theta});
  }
  out.push_back({Kind::exp});
  out.push_back({Kind::logistic_scaled, 0.0, 1.0 - options.eps_lambda});
  out.push_back({Kind::exp});
  out.push_back({Kind::exp});
  return out;
}

Eigen::VectorXd to_unconstrained(const ParamVector& theta, const TransformOptions& options) {
  const Eigen::VectorXd flat = theta.flatten();
  const auto layout = transform_layout(theta.region_count(), options);
  Eigen::VectorXd out(flat.size());
  for (Eigen::Index i = 0; i < flat.size(); ++i) out[i] = layout[static_cast<std::size_t>(i)].inverse(flat[i]);
  return out;
}

ParamVector from_unconstrained(const Eigen::VectorXd& xhat, const TransformOptions& options) {
  const auto layout = transform_layout(regions_for_dimension(xhat.size()), options);
  Eigen::VectorXd flat(xhat.size());
  for (Eigen::Index i = 0; i < xhat.size(); ++i) flat[i] = layout[static_cast<std::size_t>(i)].forward(xhat[i]);
  return ParamVector::unflatten(flat);
}

JacobianTerms log_jacobian(const Eigen::VectorXd& xhat, const TransformOptions& options) {
  const auto layout = transform_layout(regions_for_dimension(xhat.size()), options);
  JacobianTerms out;
  out.derivative.resize(xhat.size());
  out.log_det_gradient.resize(xhat.size());
  for (Eigen::Index i = 0; i < xhat.size(); ++i) {
    const TransformSpec& t = layout[static_cast<std::size_t>(i)];
    out.derivative[i] = t.derivative(xhat[i]);
    out.log_det += t.log_derivative(xhat[i]);
    out.log_det_gradient[i] = t.log_derivative_grad(xhat[i]);
  }
  return out;
}

double PriorSpec::mean_for(std::size_t region) const {
  return region < t0_means.size() ? t0_means[region] : t0_mean;
}

double PriorSpec::sd_for(std::size_t region) const {
  return region < t0_sds.size() ? t0_sds[region] : t0_sd;
}

PriorValue log_prior(const ParamVector& theta, const PriorSpec& prior) {
  PriorValue out;
  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(theta.dimension()));
  for (std::size_t r = 0; r < theta.region_count(); ++r) {
    const double sd = prior.sd_for(r);
    if (!(sd > 0.0)) throw std::invalid_argument("log_prior: t0 standard deviation must be positive");
    const double z = (theta.regions[r].t0 - prior.mean_for(r)) / sd;
    out.value += -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) - 0.5 * z * z;
    out.gradient[region_slot(r, kSlotT0)] = -z / sd;
  }
  return out;
}

}  // namespace epifield
