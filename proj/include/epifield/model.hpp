#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "epifield/quadrature.hpp"

namespace epifield {

inline constexpr double kMinShape = 2.0;
inline constexpr double kDefaultScaleFloor = 1e-2;

/// Outbreak parameters of one region: a Gamma-shaped infection pulse starting at t0.
struct RegionParams {
  double t0 = 0.0;       // days from the reference date
  double n_total = 1.0;  // expected cases in the wave
  double shape = 3.0;    // Gamma k, >= 2
  double scale = 10.0;   // Gamma theta in days

  bool operator==(const RegionParams&) const = default;
};

/// Lognormal incubation period (log-days).
struct IncubationParams {
  double mu = 1.621;
  double sigma = 0.418;
};

/// Gamma pdf in t - t0; zero for t <= t0.
double infection_rate(double t, const RegionParams& p);

/// Lognormal CDF of the incubation period; zero for t <= 0.
double incubation_cdf(double t, const IncubationParams& inc);

/// Probability that symptoms begin in (lag - 1, lag] days after infection.
double incubation_window(double lag, const IncubationParams& inc);

/// Column order of the per-day parameter sensitivities.
enum ModelSlot : int { kSlotT0 = 0, kSlotN = 1, kSlotShape = 2, kSlotScale = 3 };

/// Daily symptomatic counts of one region and their derivatives w.r.t. (t0, N, k, theta).
struct DailyPrediction {
  Eigen::VectorXd counts;
  Eigen::MatrixXd gradient;  // days x 4
};

/// Evaluates the infection/incubation convolution on a day grid.
///
/// Day t_i covers (t_i - 1, t_i]. Kernel values at the fixed lag nodes are cached at
/// construction, so one instance should be reused across parameter evaluations.
class ConvolutionModel {
 public:
  explicit ConvolutionModel(IncubationParams incubation = {}, QuadratureOptions options = {});

  const IncubationParams& incubation() const { return incubation_; }
  const QuadratureOptions& options() const { return options_; }

  Eigen::VectorXd predict(const RegionParams& p, std::span<const double> days) const;
  DailyPrediction predict_with_gradient(const RegionParams& p, std::span<const double> days) const;

 private:
  struct Node {
    double lag;
    double weight;  // quadrature weight times incubation kernel
  };

  template <bool WithGradient>
  void evaluate_day(const RegionParams& p, double log_norm, double span, double* value,
                    double* grad) const;

  IncubationParams incubation_;
  QuadratureOptions options_;
  std::vector<double> base_nodes_;
  std::vector<double> base_weights_;
  std::vector<std::vector<Node>> full_panels_;  // one per breakpoint interval
};

Eigen::VectorXd predict_daily(const RegionParams& p, const IncubationParams& inc,
                              std::span<const double> days, const QuadratureOptions& options = {});

DailyPrediction predict_daily_grad(const RegionParams& p, const IncubationParams& inc,
                                   std::span<const double> days,
                                   const QuadratureOptions& options = {});

/// Integer day grid first, first + 1, ..., first + count - 1.
std::vector<double> day_range(double first, int count);

}  // namespace epifield
