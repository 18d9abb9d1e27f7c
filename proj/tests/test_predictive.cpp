#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "epifield/likelihood.hpp"
#include "epifield/predictive.hpp"
#include "epifield/stats.hpp"
#include "epifield/transforms.hpp"
#include "support.hpp"

using namespace epifield;

namespace {

// Integral of (F(x) - 1{x >= y})^2 on a uniform grid spanning the ensemble and observation.
double crps_brute_force(const std::vector<double>& members, double y, int grid = 1000) {
  const double lo = std::min(*std::min_element(members.begin(), members.end()), y) - 1.0;
  const double hi = std::max(*std::max_element(members.begin(), members.end()), y) + 1.0;
  const double h = (hi - lo) / grid;
  double total = 0.0;
  for (int i = 0; i < grid; ++i) {
    // Midpoint of each cell, refined 50 times to resolve the steps.
    for (int j = 0; j < 50; ++j) {
      const double x = lo + (i + (j + 0.5) / 50.0) * h;
      const double f = static_cast<double>(std::count_if(members.begin(), members.end(), [&](double m) { return m <= x; })) / members.size();
      const double step = x >= y ? 1.0 : 0.0;
      total += (f - step) * (f - step) * h / 50.0;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("crps_ensemble closed forms") {
  CHECK(crps_ensemble({0.0, 2.0}, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(crps_ensemble({4.0, 4.0, 4.0}, 1.5) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(crps_ensemble({3.0}, 3.0) == 0.0);
  CHECK(crps_ensemble({2.0, 3.0}, 3.0) > 0.0);
}

TEST_CASE("crps_ensemble matches brute-force integration") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_int_distribution<int> size(1, 40);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> members(static_cast<std::size_t>(size(rng)));
    for (double& m : members) m = n(rng);
    const double y = n(rng);
    const double closed = crps_ensemble(members, y);
    CHECK(closed >= 0.0);
    CHECK(std::abs(closed - crps_brute_force(members, y)) < 1e-3);
  }
}

TEST_CASE("zero noise point mass reproduces the model") {
  ParamVector p = support::two_region_truth();
  p.noise = {0.0, 0.5, 0.0, 0.0};
  const RegionGraph g = support::path_graph(2);
  const ConvolutionModel model;
  const auto days = day_range(0.0, 40);
  const ForecastEnsemble e = sample_ppt(point_mass(p), model, g, days, 25, 3);
  const Eigen::MatrixXd expected = predict_field(model, p, days, false).counts;
  REQUIRE(e.draws() == 25);
  for (const auto& s : e.samples) CHECK(support::max_abs(s - expected) == 0.0);
  CHECK(support::max_abs(e.p50 - expected) == 0.0);
}

TEST_CASE("sample_ppt is reproducible across thread counts") {
  const ParamVector p = support::two_region_truth();
  const RegionGraph g = support::path_graph(2);
  const ConvolutionModel model;
  const auto days = day_range(0.0, 30);
  const VariationalState state = VariationalState::around(to_unconstrained(p), 0.05);
  const ForecastEnsemble a = sample_ppt(sampler_from_state(state), model, g, days, 40, 9, 1);
  const ForecastEnsemble b = sample_ppt(sampler_from_state(state), model, g, days, 40, 9, 4);
  for (std::size_t j = 0; j < a.draws(); ++j) CHECK(a.samples[j] == b.samples[j]);
}

TEST_CASE("bands are monotone and push-forward bands are narrower") {
  const ParamVector p = support::two_region_truth();
  const RegionGraph g = support::path_graph(2);
  const ConvolutionModel model;
  const auto days = day_range(0.0, 50);
  const VariationalState state = VariationalState::around(to_unconstrained(p), 0.03);
  const ForecastEnsemble e = sample_ppt(sampler_from_state(state), model, g, days, 300, 4);
  CHECK((e.p05.array() <= e.p25.array()).all());
  CHECK((e.p25.array() <= e.p50.array()).all());
  CHECK((e.p50.array() <= e.p75.array()).all());
  CHECK((e.p75.array() <= e.p95.array()).all());
  const Eigen::MatrixXd pf_width = e.pushforward_percentile(0.95) - e.pushforward_percentile(0.05);
  const Eigen::MatrixXd width = e.p95 - e.p05;
  CHECK((pf_width.array() < width.array()).all());
  CHECK(e.percentile(0.5) == e.p50);
}

TEST_CASE("bands are calibrated when data come from the model") {
  ParamVector truth;
  truth.regions = {{5.0, 3000.0, 3.0, 8.0}, {10.0, 1500.0, 3.5, 6.0}, {15.0, 800.0, 2.8, 9.0}};
  truth.noise = {4.0, 0.5, 2.0, 0.1};
  const RegionGraph g = support::path_graph(3);
  const ConvolutionModel model;
  const auto days = day_range(0.0, 100);
  const ForecastEnsemble e = sample_ppt(point_mass(truth), model, g, days, 400, 21);
  int inside_iqr = 0, inside_90 = 0, total = 0;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd obs = generate_synthetic(truth, g, model, days, 500 + rep, {}, false).observed;
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
      inside_iqr += obs.data()[i] >= e.p25.data()[i] && obs.data()[i] <= e.p75.data()[i];
      inside_90 += obs.data()[i] >= e.p05.data()[i] && obs.data()[i] <= e.p95.data()[i];
      ++total;
    }
  }
  CHECK(static_cast<double>(inside_iqr) / total == doctest::Approx(0.5).epsilon(0.2));
  CHECK(static_cast<double>(inside_90) / total == doctest::Approx(0.9).epsilon(0.11));
}

TEST_CASE("crps over an ensemble skips missing cells") {
  const ParamVector p = support::one_region_truth();
  const ForecastEnsemble e = sample_ppt(point_mass(p), ConvolutionModel{}, support::path_graph(1), day_range(0.0, 10), 50, 1);
  Eigen::MatrixXd obs = e.p50;
  obs(3, 0) = std::nan("");
  const CrpsResult r = crps(e, obs);
  CHECK(std::isnan(r.per_day(3, 0)));
  CHECK(std::isfinite(r.per_region[0]));
  double manual = 0.0;
  int scored = 0;
  for (Eigen::Index d = 0; d < 10; ++d) {
    if (d == 3) continue;
    manual += crps_ensemble(e.cell(d, 0), obs(d, 0));
    ++scored;
  }
  CHECK(r.per_region[0] == doctest::Approx(manual / scored).epsilon(1e-14));
}

TEST_CASE("crps scaling fit") {
  Eigen::VectorXd totals(5);
  totals << 50.0, 300.0, 1200.0, 8000.0, 40000.0;
  Eigen::VectorXd c(5);
  for (Eigen::Index r = 0; r < 5; ++r) c[r] = totals[r] * std::pow(totals[r], -0.28) * std::exp(1.1);
  const CrpsScaling fit = crps_ratio_and_fit(c, totals);
  CHECK(fit.slope == doctest::Approx(-0.28).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(fit.q25 <= fit.q50);
  CHECK(fit.q50 <= fit.q75);

  const CrpsScaling flat = crps_ratio_and_fit(totals * 0.2, totals);
  CHECK(std::abs(flat.slope) < 1e-12);

  Eigen::VectorXd with_zero = totals;
  with_zero[2] = 0.0;
  const CrpsScaling excl = crps_ratio_and_fit(c, with_zero);
  REQUIRE(excl.excluded.size() == 1);
  CHECK(excl.excluded[0] == 2);
  CHECK(std::isnan(excl.ratio[2]));
}
