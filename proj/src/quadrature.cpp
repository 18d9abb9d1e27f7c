#include "epifield/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace epifield {

double QuadratureRule::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = (n == 1) ? x : p1;
      const double pn_1 = (n == 1) ? 1.0 : p0;
      dp = n * (x * pn - pn_1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule map_affine(const QuadratureRule& reference, double a, double b) {
  QuadratureRule out;
  out.nodes.resize(reference.size());
  out.weights.resize(reference.size());
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t j = 0; j < reference.size(); ++j) {
    out.nodes[j] = mid + half * reference.nodes[j];
    out.weights[j] = half * reference.weights[j];
  }
  return out;
}

QuadratureRule convolution_rule(double t0, double t_i, const QuadratureOptions& options) {
  QuadratureRule rule;
  const double span = t_i - t0;
  if (!(span > 0.0)) return rule;
  const QuadratureRule base = gauss_legendre(options.nodes_per_panel);
  double lo = 0.0;
  for (double edge : options.lag_breakpoints) {
    if (edge >= span) break;
    const QuadratureRule panel = map_affine(base, lo, edge);
    for (std::size_t j = 0; j < panel.size(); ++j) {
      rule.nodes.push_back(t_i - panel.nodes[j]);
      rule.weights.push_back(panel.weights[j]);
    }
    lo = edge;
  }
  // graded last panel: s = tau - t0 = width * z^2, z in [0, 1]
  const double width = span - lo;
  for (std::size_t j = 0; j < base.size(); ++j) {
    const double z = 0.5 * (base.nodes[j] + 1.0);
    rule.nodes.push_back(t0 + width * z * z);
    rule.weights.push_back(0.5 * base.weights[j] * 2.0 * width * z);
  }
  return rule;
}

}  // namespace epifield
