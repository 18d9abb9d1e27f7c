#include "epifield/vi.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <algorithm>
#include <chrono>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "epifield/parallel.hpp"
#include "epifield/random.hpp"
#include "epifield/transforms.hpp"

namespace epifield {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxNonFinite = 10;

Eigen::VectorXd softplus_derivative(const Eigen::VectorXd& rho) {
  return rho.unaryExpr([](double r) { return logistic(r); });
}

struct SampleEvaluation {
  Eigen::VectorXd values;     // log p at each sample
  Eigen::MatrixXd gradients;  // n x d, only filled when requested
  bool finite = true;
};

SampleEvaluation evaluate_samples(const VariationalState& state, const LogDensity& target,
                                  const Eigen::MatrixXd& eps, bool with_gradient, std::size_t threads) {
  if (eps.cols() != state.dimension() || target.dimension() != state.dimension()) {
    throw std::invalid_argument("variational state, target and noise dimensions differ");
  }
  if (eps.rows() < 1) throw std::invalid_argument("need at least one Monte Carlo sample");
  const Eigen::VectorXd sigma = state.sigma();
  const auto n = static_cast<std::size_t>(eps.rows());
  SampleEvaluation out;
  out.values.resize(eps.rows());
  if (with_gradient) out.gradients.resize(eps.rows(), state.dimension());
  parallel_for(n, threads, [&](std::size_t s) {
    const auto row = static_cast<Eigen::Index>(s);
    const Eigen::VectorXd x = state.mu + sigma.cwiseProduct(eps.row(row).transpose());
    if (with_gradient) {
      Eigen::VectorXd g;
      out.values[row] = target.log_density_gradient(x, g);
      out.gradients.row(row) = g.transpose();
    } else {
      out.values[row] = target.log_density(x);
    }
  });
  out.finite = out.values.allFinite();
  return out;
}

ElboGradient non_finite_gradient(Eigen::Index d) {
  ElboGradient g;
  g.elbo = kInf;
  g.d_mu = Eigen::VectorXd::Zero(d);
  g.d_rho = Eigen::VectorXd::Zero(d);
  return g;
}

}  // namespace

Eigen::VectorXd VariationalState::sigma() const {
  return rho.unaryExpr([](double r) { return softplus(r); });
}

VariationalState VariationalState::around(const Eigen::VectorXd& mean, double scale) {
  VariationalState s;
  s.mu = mean;
  s.rho = Eigen::VectorXd::Constant(mean.size(), softplus_inverse(scale));
  return s;
}

double gaussian_entropy(const Eigen::VectorXd& sigma) {
  const double per_slot = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  return static_cast<double>(sigma.size()) * per_slot + sigma.array().log().sum();
}

void ElboTrace::push(int iter, double value, double norm, double wall, int samples) {
  if (!iteration.empty() && iter <= iteration.back()) {
    throw std::invalid_argument("trace iterations must increase");
  }
  iteration.push_back(iter);
  elbo.push_back(value);
  grad_norm.push_back(norm);
  seconds.push_back(wall);
  n_samples.push_back(samples);
}

void OptimizerConfig::validate() const {
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("ADAM betas must lie in (0, 1)");
  }
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(initial_scale > 0.0)) throw std::invalid_argument("initial_scale must be positive");
}

Eigen::MatrixXd sample_epsilon(int n, Eigen::Index d, std::uint64_t seed, std::uint64_t iteration) {
  if (n < 1 || d < 1) throw std::invalid_argument("sample_epsilon: n and d must be >= 1");
  Eigen::MatrixXd eps(n, d);
  std::normal_distribution<double> normal;
  for (int s = 0; s < n; ++s) {
    auto engine = make_engine(seed, iteration, static_cast<std::uint64_t>(s));
    for (Eigen::Index j = 0; j < d; ++j) eps(s, j) = normal(engine);
  }
  return eps;
}

double elbo_estimate(const VariationalState& state, const LogDensity& target, const Eigen::MatrixXd& eps,
                     std::size_t threads) {
  const SampleEvaluation ev = evaluate_samples(state, target, eps, false, threads);
  if (!ev.finite) return kInf;
  return -gaussian_entropy(state.sigma()) - ev.values.mean();
}

double elbo_estimate(const VariationalState& state, const LogDensity& target, int n_samples, std::uint64_t seed,
                     std::uint64_t iteration, std::size_t threads) {
  return elbo_estimate(state, target, sample_epsilon(n_samples, state.dimension(), seed, iteration), threads);
}

ElboGradient elbo_grad_reparam(const VariationalState& state, const LogDensity& target, const Eigen::MatrixXd& eps,
                               std::size_t threads) {
  const SampleEvaluation ev = evaluate_samples(state, target, eps, true, threads);
  if (!ev.finite) return non_finite_gradient(state.dimension());
  const Eigen::VectorXd sigma = state.sigma();
  const Eigen::VectorXd dsigma = softplus_derivative(state.rho);
  const double n = static_cast<double>(eps.rows());

  ElboGradient g;
  g.elbo = -gaussian_entropy(sigma) - ev.values.mean();
  g.d_mu = -ev.gradients.colwise().sum().transpose() / n;
  const Eigen::VectorXd weighted = ev.gradients.cwiseProduct(eps).colwise().sum().transpose() / n;
  g.d_rho = -dsigma.cwiseQuotient(sigma) - weighted.cwiseProduct(dsigma);
  return g;
}

ElboGradient elbo_grad_reparam(const VariationalState& state, const LogDensity& target, int n_samples,
                               std::uint64_t seed, std::uint64_t iteration, std::size_t threads) {
  return elbo_grad_reparam(state, target, sample_epsilon(n_samples, state.dimension(), seed, iteration), threads);
}

ElboGradient elbo_grad_score(const VariationalState& state, const LogDensity& target, const Eigen::MatrixXd& eps,
                             std::size_t threads) {
  const SampleEvaluation ev = evaluate_samples(state, target, eps, false, threads);
  if (!ev.finite) return non_finite_gradient(state.dimension());
  const Eigen::VectorXd sigma = state.sigma();
  const Eigen::VectorXd dsigma = softplus_derivative(state.rho);
  const double n = static_cast<double>(eps.rows());

  // d/dmu log q = eps / sigma, d/drho log q = (eps^2 - 1) sigma' / sigma
  const Eigen::VectorXd neg_lp = -ev.values;
  const Eigen::VectorXd mu_score = (eps.transpose() * neg_lp) / n;
  const Eigen::VectorXd rho_score = ((eps.array().square() - 1.0).matrix().transpose() * neg_lp) / n;

  ElboGradient g;
  g.elbo = -gaussian_entropy(sigma) + neg_lp.mean();
  g.d_mu = mu_score.cwiseQuotient(sigma);
  g.d_rho = -dsigma.cwiseQuotient(sigma) + rho_score.cwiseProduct(dsigma).cwiseQuotient(sigma);
  return g;
}

ElboGradient elbo_grad_score(const VariationalState& state, const LogDensity& target, int n_samples,
                             std::uint64_t seed, std::uint64_t iteration, std::size_t threads) {
  return elbo_grad_score(state, target, sample_epsilon(n_samples, state.dimension(), seed, iteration), threads);
}

Adam::Adam(Eigen::Index dimension, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(dimension)),
      v_(Eigen::VectorXd::Zero(dimension)),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

Eigen::VectorXd Adam::step(const Eigen::VectorXd& gradient, double step_size) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
  v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  return -step_size * (m_ / c1).cwiseQuotient(((v_ / c2).cwiseSqrt().array() + eps_).matrix());
}

ParamVector default_initial_guess(const ModelContext& context) {
  ParamVector guess;
  const double start = context.days.empty() ? 0.0 : context.days.front();
  for (std::size_t r = 0; r < context.region_count(); ++r) {
    const double total = context.observed.col(static_cast<Eigen::Index>(r)).sum();
    guess.regions.push_back({start - 10.0, std::max(1.5 * total, 1.0), 3.0, 10.0});
  }
  guess.noise = NoiseParams{1.0, 0.5, 1.0, 0.3};
  return guess;
}

double scaled_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, double value) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(grad[i]) * std::max(1.0, std::abs(x[i])));
  }
  return worst / std::max(1.0, std::abs(value));
}

namespace {

class NegativeLogDensity final : public ceres::FirstOrderFunction {
 public:
  explicit NegativeLogDensity(const LogDensity& target) : target_(target) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const Eigen::VectorXd> x(parameters, target_.dimension());
    Eigen::VectorXd g;
    const double value = target_.log_density_gradient(x, g);
    if (!std::isfinite(value)) return false;
    *cost = -value;
    if (gradient != nullptr) Eigen::Map<Eigen::VectorXd>(gradient, g.size()) = -g;
    return true;
  }
  int NumParameters() const override { return static_cast<int>(target_.dimension()); }

 private:
  const LogDensity& target_;
};

class TraceRecorder final : public ceres::IterationCallback {
 public:
  explicit TraceRecorder(std::vector<double>& trace) : trace_(trace) {}
  ceres::CallbackReturnType operator()(const ceres::IterationSummary& summary) override {
    if (summary.iteration > 0 && summary.step_is_successful) trace_.push_back(-summary.cost);
    return ceres::SOLVER_CONTINUE;
  }

 private:
  std::vector<double>& trace_;
};

}  // namespace

MleResult mle_fit(const ParamVector& initial, const ModelContext& context, const MleConfig& config) {
  const PosteriorDensity target(context, false);
  Eigen::VectorXd x = to_unconstrained(initial, context.transforms);
  Eigen::VectorXd grad;
  double value = target.log_density_gradient(x, grad);
  if (!std::isfinite(value)) {
    throw NumericalError("mle_fit: log-likelihood + log-prior is not finite at the initial guess");
  }

  MleResult result;
  result.trace.push_back(value);

  // Warm-up from a possibly distant guess, then quasi-Newton polish.
  Adam adam(x.size(), 0.9, 0.999, 1e-8);
  double step = config.adam_step;
  Eigen::VectorXd best_x = x;
  double best_value = value;
  for (int it = 0; it < config.adam_iters; ++it) {
    const Eigen::VectorXd candidate = x + adam.step(-grad, step);
    Eigen::VectorXd candidate_grad;
    const double candidate_value = target.log_density_gradient(candidate, candidate_grad);
    if (!std::isfinite(candidate_value)) {
      step *= 0.5;
      continue;
    }
    x = candidate;
    grad = candidate_grad;
    value = candidate_value;
    result.trace.push_back(value);
    if (value > best_value) {
      best_value = value;
      best_x = x;
    }
  }

  if (config.lbfgs_iters > 0) {
    ceres::GradientProblemSolver::Options options;
    options.line_search_direction_type = ceres::LBFGS;
    options.max_num_iterations = config.lbfgs_iters;
    options.function_tolerance = 1e-15;
    options.gradient_tolerance = 1e-10;
    options.parameter_tolerance = 1e-14;
    options.logging_type = ceres::SILENT;
    options.minimizer_progress_to_stdout = false;
    TraceRecorder recorder(result.trace);
    options.callbacks.push_back(&recorder);
    ceres::GradientProblem problem(new NegativeLogDensity(target));
    Eigen::VectorXd polished = best_x;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, polished.data(), &summary);
    Eigen::VectorXd polished_grad;
    const double polished_value = target.log_density_gradient(polished, polished_grad);
    if (std::isfinite(polished_value) && polished_value >= best_value) {
      best_value = polished_value;
      best_x = polished;
    }
  }

  target.log_density_gradient(best_x, grad);
  result.xhat = best_x;
  result.params = from_unconstrained(best_x, context.transforms);
  result.objective = best_value;
  result.scaled_grad_norm = scaled_gradient_norm(best_x, grad, best_value);
  result.converged = result.scaled_grad_norm < config.tolerance;
  return result;
}

VariationalFit optimize_elbo(const VariationalState& start, const LogDensity& target, const OptimizerConfig& config) {
  config.validate();
  VariationalFit fit;
  fit.state = start;
  const Eigen::Index d = start.dimension();
  Adam adam(2 * d, config.beta1, config.beta2, config.eps_adam);
  const auto clock_start = std::chrono::steady_clock::now();
  int non_finite = 0;

  for (int it = 0; it < config.max_iters; ++it) {
    const ElboGradient g = elbo_grad_reparam(fit.state, target, config.n_samples, config.seed,
                                             static_cast<std::uint64_t>(it), config.threads);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    const double norm = std::isfinite(g.elbo) ? g.norm() : kInf;
    fit.trace.push(it, g.elbo, norm, seconds, config.n_samples);
    if (!std::isfinite(g.elbo)) {
      if (++non_finite >= kMaxNonFinite) {
        throw DivergenceError("ELBO was non-finite for " + std::to_string(kMaxNonFinite) +
                                  " consecutive iterations (last iteration " + std::to_string(it) + ")",
                              fit.trace);
      }
      continue;
    }
    non_finite = 0;

    Eigen::VectorXd joint(2 * d);
    joint << g.d_mu, g.d_rho;
    const Eigen::VectorXd update = adam.step(joint, config.step_size);
    fit.state.mu += update.head(d);
    fit.state.rho += update.tail(d);

    if (config.grad_tolerance > 0.0) {
      const auto w = static_cast<std::size_t>(std::max(1, config.tolerance_window));
      const auto& norms = fit.trace.grad_norm;
      if (norms.size() >= w) {
        double sum = 0.0;
        for (auto k = norms.size() - w; k < norms.size(); ++k) sum += norms[k];
        if (sum / static_cast<double>(w) < config.grad_tolerance) break;
      }
    }
  }
  return fit;
}

VariationalFit fit_mfvi(const ModelContext& context, const ParamVector& initial, const OptimizerConfig& config,
                        const MleConfig& mle) {
  config.validate();
  MleResult start = mle_fit(initial, context, mle);
  const PosteriorDensity target(context, config.include_jacobian_entropy);
  VariationalFit fit = optimize_elbo(VariationalState::around(start.xhat, config.initial_scale), target, config);
  fit.mle = std::move(start);
  return fit;
}

VariationalFit fit_mfvi(const ModelContext& context, const OptimizerConfig& config, const MleConfig& mle) {
  return fit_mfvi(context, default_initial_guess(context), config, mle);
}

}  // namespace epifield
