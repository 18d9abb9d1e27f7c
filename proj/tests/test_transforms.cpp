#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "epifield/gradcheck.hpp"
#include "epifield/transforms.hpp"
#include "support.hpp"

using namespace epifield;

TEST_CASE("scalar helpers are stable in the tails") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(std::isfinite(softplus_inverse(1e-300)));
  CHECK(softplus_inverse(softplus(3.5)) == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(-800.0) == 0.0);
  CHECK(logistic(800.0) == 1.0);
}

TEST_CASE("to_unconstrained reference points") {
  const TransformOptions opts;
  ParamVector p;
  p.regions.push_back({4.0, 1.0, 2.0 + std::log(2.0), opts.eps_theta + std::log(2.0)});
  p.noise = {1.0, (1.0 - opts.eps_lambda) / 2.0, 1.0, 1.0};
  const Eigen::VectorXd x = to_unconstrained(p, opts);
  CHECK(x[0] == 4.0);
  for (Eigen::Index i = 1; i < x.size(); ++i) CHECK(std::abs(x[i]) < 1e-14);
}

TEST_CASE("from_unconstrained at the origin") {
  const TransformOptions opts;
  const ParamVector p = from_unconstrained(Eigen::VectorXd::Zero(8), opts);
  REQUIRE(p.region_count() == 1);
  CHECK(p.regions[0].t0 == 0.0);
  CHECK(p.regions[0].n_total == 1.0);
  CHECK(p.regions[0].shape == doctest::Approx(2.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(p.regions[0].scale == doctest::Approx(opts.eps_theta + std::log(2.0)).epsilon(1e-15));
  CHECK(p.noise.tau == 1.0);
  CHECK(p.noise.lambda == doctest::Approx((1.0 - opts.eps_lambda) / 2.0).epsilon(1e-15));
  CHECK(p.noise.sigma_a == 1.0);
  CHECK(p.noise.sigma_m == 1.0);
}

TEST_CASE("boundary values are rejected") {
  ParamVector p;
  p.regions.push_back({0.0, 10.0, 2.0, 5.0});
  CHECK_THROWS_AS(to_unconstrained(p), std::domain_error);
  p.regions[0].shape = 3.0;
  p.noise.lambda = 1.0 - 1e-3;
  CHECK_THROWS_AS(to_unconstrained(p), std::domain_error);
  p.noise.lambda = 0.5;
  p.noise.tau = 0.0;
  CHECK_THROWS_AS(to_unconstrained(p), std::domain_error);
}

TEST_CASE("round trip and monotonicity") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ParamVector p = support::random_params(rng, 3);
    const ParamVector back = from_unconstrained(to_unconstrained(p));
    const Eigen::VectorXd a = p.flatten();
    const Eigen::VectorXd b = back.flatten();
    for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
  }
  for (const TransformSpec& spec : transform_layout(1)) {
    double previous = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
      const double x = -25.0 + 50.0 * i / 999.0;
      const double y = spec.forward(x);
      CHECK(y > previous);
      CHECK(spec.derivative(x) > 0.0);
      previous = y;
    }
  }
}

TEST_CASE("lambda approaches its upper bound monotonically") {
  const TransformOptions opts;
  const TransformSpec spec = transform_layout(1, opts)[noise_slot(1, kSlotLambda)];
  double previous = 0.0;
  for (double x = 0.0; x < 40.0; x += 0.5) {
    const double y = spec.forward(x);
    CHECK(y >= previous);
    CHECK(y <= 1.0 - opts.eps_lambda);
    previous = y;
  }
  CHECK(spec.forward(40.0) == doctest::Approx(1.0 - opts.eps_lambda).epsilon(1e-15));
}

TEST_CASE("log_jacobian reference values and gradient") {
  const JacobianTerms zero = log_jacobian(Eigen::VectorXd::Zero(8));
  CHECK(zero.derivative[region_slot(0, kSlotT0)] == 1.0);
  CHECK(zero.derivative[region_slot(0, kSlotN)] == 1.0);
  CHECK(zero.derivative[region_slot(0, kSlotShape)] == 0.5);
  CHECK(zero.derivative[region_slot(0, kSlotScale)] == 0.5);
  // log 0.5 twice for the softplus slots, log((1 - eps)/4) for lambda.
  CHECK(zero.log_det == doctest::Approx(2.0 * std::log(0.5) + std::log((1.0 - 1e-3) / 4.0)).epsilon(1e-14));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 2.0);
  Eigen::VectorXd x(12);
  for (auto& v : x) v = n(rng);
  const JacobianTerms j = log_jacobian(x);
  const Eigen::VectorXd fd = central_difference([](const Eigen::VectorXd& v) { return log_jacobian(v).log_det; }, x, 1e-6);
  CHECK(max_relative_error(j.log_det_gradient, fd, 1e-6) < 1e-8);
}

TEST_CASE("push-forward densities integrate to one") {
  const auto layout = transform_layout(1);
  for (const TransformSpec& spec : layout) {
    for (auto [m, s] : {std::pair{0.0, 1.0}, std::pair{1.5, 0.3}, std::pair{-2.0, 0.8}}) {
      // Midpoint rule in y on a grid mapped through f.
      const int n = 200000;
      const double lo = m - 10.0 * s;
      const double hi = m + 10.0 * s;
      double total = 0.0;
      double y_prev = spec.forward(lo);
      for (int i = 1; i <= n; ++i) {
        const double x_mid = lo + (i - 0.5) * (hi - lo) / n;
        const double y_next = spec.forward(lo + i * (hi - lo) / n);
        const double density_x = std::exp(-0.5 * std::pow((x_mid - m) / s, 2)) / (s * std::sqrt(2.0 * std::numbers::pi));
        total += density_x / spec.derivative(x_mid) * (y_next - y_prev);
        y_prev = y_next;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("log_prior") {
  PriorSpec prior;
  ParamVector p;
  for (int r = 0; r < 3; ++r) p.regions.push_back({prior.t0_mean, 100.0, 3.0, 5.0});
  const PriorValue at_mode = log_prior(p, prior);
  CHECK(at_mode.value == doctest::Approx(3.0 * -0.5 * std::log(2.0 * std::numbers::pi * prior.t0_sd * prior.t0_sd)).epsilon(1e-14));
  CHECK(support::max_abs(at_mode.gradient) == 0.0);

  p.regions[1].t0 = 17.0;
  p.regions[2].n_total = 5e4;
  const PriorValue v = log_prior(p, prior);
  CHECK(v.gradient[region_slot(1, kSlotT0)] == doctest::Approx(-(17.0 - prior.t0_mean) / (prior.t0_sd * prior.t0_sd)));
  for (Eigen::Index i = 0; i < v.gradient.size(); ++i) {
    if (i % 4 != 0 || i >= 12) CHECK(v.gradient[i] == 0.0);
  }
  const Eigen::VectorXd fd = central_difference(
      [&](const Eigen::VectorXd& flat) { return log_prior(ParamVector::unflatten(flat), prior).value; }, p.flatten(), 1e-6);
  for (Eigen::Index i = 0; i < fd.size(); ++i) CHECK(std::abs(fd[i] - v.gradient[i]) < 1e-8);

  PriorSpec per_region;
  per_region.t0_means = {0.0, 5.0, 10.0};
  per_region.t0_sds = {1.0, 2.0, 3.0};
  CHECK(per_region.mean_for(1) == 5.0);
  CHECK(per_region.sd_for(2) == 3.0);
}
