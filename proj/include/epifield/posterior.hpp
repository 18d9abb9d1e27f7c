#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epifield/graph.hpp"
#include "epifield/model.hpp"
#include "epifield/params.hpp"
#include "epifield/transforms.hpp"

namespace epifield {

/// Log-density over an unconstrained vector, as consumed by the optimizers and samplers.
class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual Eigen::Index dimension() const = 0;
  /// Returns -inf where the density cannot be evaluated.
  virtual double log_density(const Eigen::VectorXd& x) const = 0;
  /// Same as log_density; `grad` is resized and filled (zeros when non-finite).
  virtual double log_density_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const = 0;
};

/// Everything needed to evaluate the calibration posterior for one fit window.
struct ModelContext {
  Eigen::MatrixXd observed;  // days x regions
  std::vector<double> days;  // integer offsets from the reference date
  RegionGraph graph;
  ConvolutionModel model;
  PriorSpec prior;
  TransformOptions transforms;

  std::size_t region_count() const { return graph.size(); }
  Eigen::Index dimension() const { return static_cast<Eigen::Index>(4 * graph.size() + 4); }
};

struct PosteriorTerms {
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  double log_jacobian = 0.0;
};

/// log p(D | f(x)) + log p(f(x)) [+ sum_i log f_i'(x_i)] over unconstrained x.
class PosteriorDensity final : public LogDensity {
 public:
  PosteriorDensity(const ModelContext& context, bool include_jacobian);

  Eigen::Index dimension() const override { return context_.dimension(); }
  double log_density(const Eigen::VectorXd& x) const override;
  double log_density_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override;

  /// Separate contributions at x; throws on numerical failure.
  PosteriorTerms terms(const Eigen::VectorXd& x) const;

  const ModelContext& context() const { return context_; }
  bool includes_jacobian() const { return include_jacobian_; }

 private:
  const ModelContext& context_;
  bool include_jacobian_;
};

}  // namespace epifield
