#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "epifield/gradcheck.hpp"
#include "epifield/likelihood.hpp"
#include "epifield/transforms.hpp"
#include "support.hpp"

using namespace epifield;

namespace {

// Dense per-day likelihood built from explicit matrix inverses.
double dense_log_likelihood(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted, const RegionGraph& graph,
                            const NoiseParams& eta) {
  const Eigen::Index r = observed.cols();
  Eigen::MatrixXd p = -eta.lambda * graph.adjacency();
  for (Eigen::Index i = 0; i < r; ++i) p(i, i) = std::max(graph.degrees()[i], kDegreeRidge);
  const Eigen::MatrixXd p_inv = p.inverse();
  double total = 0.0;
  for (Eigen::Index day = 0; day < observed.rows(); ++day) {
    Eigen::MatrixXd cov = eta.tau * p_inv;
    for (Eigen::Index i = 0; i < r; ++i) {
      const double s = eta.sigma_a + eta.sigma_m * predicted(day, i);
      cov(i, i) += s * s;
    }
    total += support::mvn_logpdf(observed.row(day).transpose(), predicted.row(day).transpose(), cov);
  }
  return total;
}

struct Instance {
  RegionGraph graph;
  ConvolutionModel model;
  std::vector<double> days;
  ParamVector params;
  Eigen::MatrixXd observed;
};

Instance random_instance(std::uint64_t seed, std::size_t regions = 3, int n_days = 60) {
  std::mt19937_64 rng(seed);
  Instance inst{support::path_graph(regions), ConvolutionModel{}, day_range(0.0, n_days), support::random_params(rng, regions), {}};
  for (auto& p : inst.params.regions) {
    p.t0 = std::uniform_real_distribution<double>(-15.0, 20.0)(rng) + 0.31;
  }
  const FieldPrediction pred = predict_field(inst.model, inst.params, inst.days, false);
  std::normal_distribution<double> noise(0.0, 1.0);
  inst.observed = pred.counts;
  for (Eigen::Index i = 0; i < inst.observed.size(); ++i) {
    inst.observed.data()[i] += (2.0 + 0.2 * inst.observed.data()[i]) * noise(rng);
  }
  return inst;
}

}  // namespace

TEST_CASE("build_precision") {
  const RegionGraph g = support::path_graph(2);
  CHECK(support::max_abs(build_precision(g, 0.0) - Eigen::Matrix2d::Identity()) == 0.0);
  Eigen::Matrix2d expected;
  expected << 1.0, -0.5, -0.5, 1.0;
  CHECK(support::max_abs(build_precision(g, 0.5) - expected) < 1e-15);

  const RegionGraph isolated = RegionGraph::from_ids({"a", "b", "c"}, {{"a", "b"}});
  const Eigen::MatrixXd p = build_precision(isolated, 0.9);
  CHECK(p(2, 2) == kDegreeRidge);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(p).info() == Eigen::Success);
}

TEST_CASE("build_covariance examples") {
  const RegionGraph g = support::path_graph(2);
  const Eigen::Vector2d y(10.0, 20.0);

  const CovarianceFactor diag = build_covariance(g, NoiseParams{0.0, 0.5, 1.0, 0.1}, y);
  CHECK(diag.sigma()(0, 1) == 0.0);
  CHECK(diag.sigma()(0, 0) == doctest::Approx(4.0));
  CHECK(diag.sigma()(1, 1) == doctest::Approx(9.0));

  const CovarianceFactor pure = build_covariance(support::path_graph(3), NoiseParams{2.0, 0.0, 0.0, 0.0}, Eigen::Vector3d::Zero());
  CHECK(pure.sigma()(0, 0) == doctest::Approx(2.0));
  CHECK(pure.sigma()(1, 1) == doctest::Approx(1.0));
  CHECK(pure.sigma()(0, 1) == 0.0);

  // 2 P^-1 + I with P = [[1, -1/2], [-1/2, 1]]: P^-1 = (4/3) [[1, 1/2], [1/2, 1]].
  const CovarianceFactor ex = build_covariance(g, NoiseParams{2.0, 0.5, 1.0, 0.0}, y);
  Eigen::Matrix2d expected;
  expected << 8.0 / 3.0 + 1.0, 4.0 / 3.0, 4.0 / 3.0, 8.0 / 3.0 + 1.0;
  CHECK(support::max_abs(ex.sigma() - expected) < 1e-12);
  CHECK(ex.logdet() == doctest::Approx(std::log(expected.determinant())).epsilon(1e-13));
  const Eigen::MatrixXd l = ex.lower();
  CHECK(ex.logdet() == doctest::Approx(2.0 * l.diagonal().array().log().sum()).epsilon(1e-14));
}

TEST_CASE("covariance is reproduced from its parts") {
  std::mt19937_64 rng(5);
  const RegionGraph g = support::path_graph(5);
  const NoiseParams eta = support::random_noise(rng);
  Eigen::VectorXd y(5);
  y << 0.0, 3.0, 40.0, 400.0, 1.5;
  const CovarianceFactor f = build_covariance(g, eta, y);
  Eigen::MatrixXd expected = eta.tau * build_precision(g, eta.lambda).inverse();
  expected.diagonal().array() += (eta.sigma_a + eta.sigma_m * y.array()).square();
  CHECK(support::max_abs(f.sigma() - expected) / support::max_abs(expected) < 1e-12);
  CHECK(support::max_abs(f.sigma() - f.sigma().transpose()) == 0.0);
}

TEST_CASE("precision stays positive definite at the coupling bound on the NM graph") {
  const std::string dir = std::string(EPIFIELD_FIXTURE_DIR) + "/nm33";
  const RegionGraph g = support::load_fixture_graph(dir);
  REQUIRE(g.size() == 33);
  const Eigen::MatrixXd p = build_precision(g, 1.0 - 1e-3);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("log_likelihood closed forms") {
  const RegionGraph one = RegionGraph::from_ids({"a"}, {});
  const int n = 12;
  const Eigen::MatrixXd y = Eigen::MatrixXd::Constant(n, 1, 7.0);
  const double sa = 1.7;
  CHECK(log_likelihood(y, y, one, NoiseParams{0.0, 0.3, sa, 0.0}) ==
        doctest::Approx(-0.5 * n * std::log(2.0 * std::numbers::pi * sa * sa)).epsilon(1e-14));

  Eigen::MatrixXd shifted = y;
  shifted(3, 0) += 2.5;
  const NoiseParams unit{0.0, 0.3, 1.0, 0.0};
  CHECK(log_likelihood(y, y, one, unit) - log_likelihood(shifted, y, one, unit) == doctest::Approx(2.5 * 2.5 / 2.0));
}

TEST_CASE("log_likelihood matches a dense multivariate normal oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const Instance inst = random_instance(seed);
    const Eigen::MatrixXd predicted = predict_field(inst.model, inst.params, inst.days, false).counts;
    const double value = log_likelihood(inst.observed, predicted, inst.graph, inst.params.noise);
    CHECK(std::abs(value - dense_log_likelihood(inst.observed, predicted, inst.graph, inst.params.noise)) < 1e-10 * std::max(1.0, std::abs(value)));
    const LikelihoodTerms terms = log_likelihood_terms(inst.observed, predicted, inst.graph, inst.params.noise);
    CHECK(terms.value == doctest::Approx(value).epsilon(1e-14));
  }
}

TEST_CASE("log_likelihood rejects shape mismatches") {
  const RegionGraph g = support::path_graph(2);
  CHECK_THROWS(log_likelihood(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(4, 2), g, NoiseParams{}));
  CHECK_THROWS(log_likelihood(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 3), g, NoiseParams{}));
}

TEST_CASE("log_likelihood_grad matches finite differences for every slot") {
  const TransformOptions opts;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Instance inst = random_instance(seed);
    const LikelihoodGradient g = log_likelihood_grad(inst.observed, inst.days, inst.params, inst.model, inst.graph);
    const Eigen::VectorXd theta = inst.params.flatten();
    REQUIRE(g.gradient.size() == theta.size());
    auto value_at = [&](const Eigen::VectorXd& flat) {
      const ParamVector p = ParamVector::unflatten(flat);
      const Eigen::MatrixXd pred = predict_field(inst.model, p, inst.days, false).counts;
      return log_likelihood(inst.observed, pred, inst.graph, p.noise);
    };
    CHECK(g.value == doctest::Approx(value_at(theta)).epsilon(1e-14));
    // Differences in unconstrained coordinates.
    const auto layout = transform_layout(inst.params.region_count(), opts);
    const Eigen::VectorXd xhat = to_unconstrained(inst.params, opts);
    const Eigen::VectorXd fd = epifield::central_difference(
        [&](const Eigen::VectorXd& x) { return value_at(from_unconstrained(x, opts).flatten()); }, xhat);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double analytic = g.gradient[i] * layout[i].derivative(xhat[i]);
      CAPTURE(i);
      CHECK(epifield::relative_error(analytic, fd[i], 1e-3) < 1e-5);
    }
  }
}

TEST_CASE("tau partial matches a dense trace oracle") {
  const Instance inst = random_instance(21, 4, 30);
  const FieldPrediction pred = predict_field(inst.model, inst.params, inst.days, false);
  const LikelihoodTerms terms = log_likelihood_terms(inst.observed, pred.counts, inst.graph, inst.params.noise);
  Eigen::MatrixXd p = build_precision(inst.graph, inst.params.noise.lambda);
  const Eigen::MatrixXd p_inv = p.inverse();
  double expected = 0.0;
  for (Eigen::Index day = 0; day < pred.counts.rows(); ++day) {
    Eigen::MatrixXd cov = inst.params.noise.tau * p_inv;
    cov.diagonal().array() += (inst.params.noise.sigma_a + inst.params.noise.sigma_m * pred.counts.row(day).transpose().array()).square();
    const Eigen::MatrixXd cov_inv = cov.inverse();
    const Eigen::VectorXd r = (inst.observed.row(day) - pred.counts.row(day)).transpose();
    expected += -0.5 * (cov_inv * p_inv).trace() + 0.5 * r.dot(cov_inv * p_inv * cov_inv * r);
  }
  CHECK(std::abs(terms.d_noise[kSlotTau] - expected) < 1e-8 * std::max(1.0, std::abs(expected)));
}

TEST_CASE("without multiplicative noise the logdet does not depend on predictions") {
  Instance inst = random_instance(31);
  inst.params.noise.sigma_m = 0.0;
  const Eigen::MatrixXd pred = predict_field(inst.model, inst.params, inst.days, false).counts;
  // Zero residuals: only the logdet term remains.
  const LikelihoodTerms terms = log_likelihood_terms(pred, pred, inst.graph, inst.params.noise);
  CHECK(support::max_abs(terms.d_predicted) == 0.0);
}

TEST_CASE("log_likelihood is invariant under region permutation") {
  const Instance inst = random_instance(41, 4, 40);
  const Eigen::MatrixXd pred = predict_field(inst.model, inst.params, inst.days, false).counts;
  const std::vector<std::size_t> order = {2, 0, 3, 1};
  const RegionGraph permuted = inst.graph.subset(order);
  Eigen::MatrixXd obs_p(inst.observed.rows(), 4), pred_p(pred.rows(), 4);
  for (std::size_t j = 0; j < order.size(); ++j) {
    obs_p.col(static_cast<Eigen::Index>(j)) = inst.observed.col(static_cast<Eigen::Index>(order[j]));
    pred_p.col(static_cast<Eigen::Index>(j)) = pred.col(static_cast<Eigen::Index>(order[j]));
  }
  const double a = log_likelihood(inst.observed, pred, inst.graph, inst.params.noise);
  const double b = log_likelihood(obs_p, pred_p, permuted, inst.params.noise);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("reusing a covariance factor is bit-identical to rebuilding it") {
  const Instance inst = random_instance(51);
  const Eigen::MatrixXd pred = predict_field(inst.model, inst.params, inst.days, false).counts;
  const GmrfTerm gmrf = GmrfTerm::build(inst.graph, inst.params.noise.lambda);
  for (Eigen::Index day = 0; day < pred.rows(); day += 7) {
    const Eigen::VectorXd y = pred.row(day).transpose();
    const Eigen::VectorXd r = inst.observed.row(day).transpose() - y;
    const CovarianceFactor cached = build_covariance(gmrf, inst.params.noise, y);
    const double first = cached.log_density(r);
    const double again = cached.log_density(r);
    const double rebuilt = build_covariance(gmrf, inst.params.noise, y).log_density(r);
    CHECK(first == again);
    CHECK(first == rebuilt);
  }
  CHECK(log_likelihood(inst.observed, pred, inst.graph, inst.params.noise) ==
        log_likelihood(inst.observed, pred, inst.graph, inst.params.noise));
}

TEST_CASE("covariance_root handles semi-definite input") {
  Eigen::Matrix2d pd;
  pd << 4.0, 1.0, 1.0, 3.0;
  Eigen::MatrixXd s = covariance_root(pd);
  CHECK(support::max_abs(s * s.transpose() - pd) < 1e-12);
  Eigen::Matrix2d psd;
  psd << 1.0, 1.0, 1.0, 1.0;
  s = covariance_root(psd);
  CHECK(support::max_abs(s * s.transpose() - psd) < 1e-12);
  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(covariance_root(indefinite), NumericalError);
}
