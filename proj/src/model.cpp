#include "epifield/model.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace epifield {

namespace {

double log_gamma_normalizer(const RegionParams& p) {
  return -p.shape * std::log(p.scale) - std::lgamma(p.shape);
}

// erfc argument of the lognormal CDF; F(t) = erfc(-z)/2, 1 - F(t) = erfc(z)/2
double lognormal_z(double t, const IncubationParams& inc) {
  return (std::log(t) - inc.mu) / (inc.sigma * std::numbers::sqrt2);
}

}  // namespace

double infection_rate(double t, const RegionParams& p) {
  const double s = t - p.t0;
  if (!(s > 0.0)) return 0.0;
  return std::exp(log_gamma_normalizer(p) + (p.shape - 1.0) * std::log(s) - s / p.scale);
}

double incubation_cdf(double t, const IncubationParams& inc) {
  if (!(t > 0.0)) return 0.0;
  return 0.5 * std::erfc(-lognormal_z(t, inc));
}

double incubation_window(double lag, const IncubationParams& inc) {
  if (!(lag > 0.0)) return 0.0;
  if (lag <= 1.0) return incubation_cdf(lag, inc);
  const double z_hi = lognormal_z(lag, inc);
  const double z_lo = lognormal_z(lag - 1.0, inc);
  // difference of upper tails is accurate once both CDF values approach one
  const double value = (z_lo > 0.0) ? 0.5 * (std::erfc(z_lo) - std::erfc(z_hi))
                                    : 0.5 * (std::erfc(-z_hi) - std::erfc(-z_lo));
  return value > 0.0 ? value : 0.0;
}

ConvolutionModel::ConvolutionModel(IncubationParams incubation, QuadratureOptions options)
    : incubation_(incubation), options_(std::move(options)) {
  if (options_.nodes_per_panel < 2) {
    throw std::invalid_argument("ConvolutionModel: nodes_per_panel must be at least 2");
  }
  if (!(incubation_.sigma > 0.0)) {
    throw std::invalid_argument("ConvolutionModel: incubation sigma must be positive");
  }
  double prev = 0.0;
  for (double edge : options_.lag_breakpoints) {
    if (!(edge > prev)) {
      throw std::invalid_argument("ConvolutionModel: lag breakpoints must be increasing and > 0");
    }
    prev = edge;
  }
  const QuadratureRule base = gauss_legendre(options_.nodes_per_panel);
  base_nodes_ = base.nodes;
  base_weights_ = base.weights;
  double lo = 0.0;
  for (double edge : options_.lag_breakpoints) {
    const QuadratureRule panel = map_affine(base, lo, edge);
    std::vector<Node> nodes;
    nodes.reserve(panel.size());
    for (std::size_t j = 0; j < panel.size(); ++j) {
      nodes.push_back({panel.nodes[j], panel.weights[j] * incubation_window(panel.nodes[j], incubation_)});
    }
    full_panels_.push_back(std::move(nodes));
    lo = edge;
  }
}

// Sums over nodes of w * kernel * f(s) with s = span - lag, plus the moments needed by
// the parameter derivatives: f * dlogf/ds, f * log s, f * s.
template <bool WithGradient>
void ConvolutionModel::evaluate_day(const RegionParams& p, double log_norm, double span,
                                    double* value, double* grad) const {
  const double km1 = p.shape - 1.0;
  const double inv_scale = 1.0 / p.scale;
  double sum_f = 0.0;
  double sum_df = 0.0;
  double sum_log = 0.0;
  double sum_s = 0.0;
  auto accumulate = [&](double s, double weight) {
    if (weight == 0.0) return;
    const double log_s = std::log(s);
    const double f = weight * std::exp(log_norm + km1 * log_s - s * inv_scale);
    sum_f += f;
    if constexpr (WithGradient) {
      sum_df += f * (km1 / s - inv_scale);
      sum_log += f * log_s;
      sum_s += f * s;
    }
  };

  double lo = 0.0;
  std::size_t panel = 0;
  for (; panel < full_panels_.size(); ++panel) {
    const double edge = options_.lag_breakpoints[panel];
    if (edge >= span) break;
    for (const Node& node : full_panels_[panel]) accumulate(span - node.lag, node.weight);
    lo = edge;
  }
  const double width = span - lo;
  for (std::size_t j = 0; j < base_nodes_.size(); ++j) {
    const double z = 0.5 * (base_nodes_[j] + 1.0);
    const double s = width * z * z;
    const double w = base_weights_[j] * width * z;
    accumulate(s, w * incubation_window(span - s, incubation_));
  }

  *value = p.n_total * sum_f;
  if constexpr (WithGradient) {
    grad[kSlotT0] = -p.n_total * sum_df;
    grad[kSlotN] = sum_f;
    grad[kSlotShape] =
        p.n_total * (sum_log - (std::log(p.scale) + boost::math::digamma(p.shape)) * sum_f);
    grad[kSlotScale] = p.n_total * (sum_s * inv_scale * inv_scale - p.shape * inv_scale * sum_f);
  }
}

Eigen::VectorXd ConvolutionModel::predict(const RegionParams& p, std::span<const double> days) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(days.size()));
  const double log_norm = log_gamma_normalizer(p);
  for (std::size_t i = 0; i < days.size(); ++i) {
    const double span = days[i] - p.t0;
    if (!(span > 0.0)) continue;
    evaluate_day<false>(p, log_norm, span, &out[static_cast<Eigen::Index>(i)], nullptr);
  }
  return out;
}

DailyPrediction ConvolutionModel::predict_with_gradient(const RegionParams& p,
                                                        std::span<const double> days) const {
  const auto n = static_cast<Eigen::Index>(days.size());
  DailyPrediction out{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, 4)};
  const double log_norm = log_gamma_normalizer(p);
  double grad[4];
  for (Eigen::Index i = 0; i < n; ++i) {
    const double span = days[static_cast<std::size_t>(i)] - p.t0;
    if (!(span > 0.0)) continue;
    evaluate_day<true>(p, log_norm, span, &out.counts[i], grad);
    for (int c = 0; c < 4; ++c) out.gradient(i, c) = grad[c];
  }
  return out;
}

Eigen::VectorXd predict_daily(const RegionParams& p, const IncubationParams& inc,
                              std::span<const double> days, const QuadratureOptions& options) {
  return ConvolutionModel(inc, options).predict(p, days);
}

DailyPrediction predict_daily_grad(const RegionParams& p, const IncubationParams& inc,
                                   std::span<const double> days, const QuadratureOptions& options) {
  return ConvolutionModel(inc, options).predict_with_gradient(p, days);
}

std::vector<double> day_range(double first, int count) {
  std::vector<double> days(static_cast<std::size_t>(count > 0 ? count : 0));
  for (std::size_t i = 0; i < days.size(); ++i) days[i] = first + static_cast<double>(i);
  return days;
}

}  // namespace epifield
