#pragma once

#include <cstddef>
#include <vector>

namespace epifield {

/// Nodes and weights of a quadrature rule on a fixed interval.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <typename F>
  double integrate(F&& f) const {
    double total = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) total += weights[j] * f(nodes[j]);
    return total;
  }

  double total_weight() const;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// Affine map of a rule defined on [-1, 1] onto [a, b].
QuadratureRule map_affine(const QuadratureRule& reference, double a, double b);

/// Layout of the composite rule used for the incubation convolution.
///
/// The convolution is integrated in lag coordinates u = t_i - tau, u in [0, t_i - t0].
/// Panels are delimited by `lag_breakpoints`; the incubation kernel only varies quickly
/// over the first few weeks of lag, so panels are narrow there and the tail is one panel.
/// The panel that ends at the outbreak start (u = t_i - t0) uses a quadratic grading
/// toward that end, where the Gamma pulse behaves like (tau - t0)^(k-1).
struct QuadratureOptions {
  int nodes_per_panel = 16;
  std::vector<double> lag_breakpoints{1.0, 3.0, 6.0, 10.0, 16.0, 25.0, 40.0};
};

/// The composite rule for one day, expressed in calendar time tau on [t0, t_i].
/// Weights sum to t_i - t0. Empty when t_i <= t0.
QuadratureRule convolution_rule(double t0, double t_i, const QuadratureOptions& options = {});

}  // namespace epifield
