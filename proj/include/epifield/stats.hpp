#pragma once

#include <span>
#include <vector>

namespace epifield {

/// Linear-interpolation quantile of sorted data (the "type 7" definition).
double quantile_sorted(std::span<const double> sorted, double q);
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);
double sample_variance(std::span<const double> values);

/// Trailing moving average; the first window-1 entries average what is available.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
LinearFit least_squares_line(std::span<const double> x, std::span<const double> y);

double normal_cdf(double z);

}  // namespace epifield
