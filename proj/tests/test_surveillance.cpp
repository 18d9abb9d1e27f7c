#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "epifield/surveillance.hpp"
#include "support.hpp"

using namespace epifield;

namespace {

using Members = std::set<int>;

struct NaiveMerge {
  Members a, b;
  double height;
};

// Direct O(R^3) agglomeration over explicit member sets.
std::vector<NaiveMerge> naive_agglomerate(const Eigen::MatrixXd& x, Linkage linkage) {
  std::vector<Members> clusters;
  for (int i = 0; i < x.rows(); ++i) clusters.push_back({i});
  auto dist = [&](const Members& a, const Members& b) {
    double best = linkage == Linkage::single ? std::numeric_limits<double>::infinity() : 0.0;
    for (int i : a) {
      for (int j : b) {
        const double d = (x.row(i) - x.row(j)).norm();
        if (linkage == Linkage::complete) best = std::max(best, d);
        else if (linkage == Linkage::single) best = std::min(best, d);
        else best += d / (a.size() * b.size());
      }
    }
    return best;
  };
  std::vector<NaiveMerge> out;
  while (clusters.size() > 1) {
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = dist(clusters[i], clusters[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    out.push_back({clusters[bi], clusters[bj], best});
    Members merged = clusters[bi];
    merged.insert(clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<long>(bj));
    clusters[bi] = merged;
  }
  return out;
}

Eigen::MatrixXd constant_boundary(Eigen::Index days, Eigen::Index regions, double value) {
  return Eigen::MatrixXd::Constant(days, regions, value);
}

}  // namespace

TEST_CASE("detect dates an alarm at the third consecutive outlier") {
  const Eigen::MatrixXd boundary = constant_boundary(10, 2, 10.0);
  Eigen::MatrixXd obs = constant_boundary(10, 2, 5.0);
  obs(3, 1) = obs(4, 1) = obs(5, 1) = 11.0;
  const DetectionResult r = detect(boundary, obs, 0);
  CHECK(r.outliers.size() == 3);
  REQUIRE(r.alarms.size() == 1);
  CHECK(r.alarms[0].region == 1);
  CHECK(r.alarms[0].row == 5);
  CHECK(r.alarms[0].run_length == 3);

  obs(6, 1) = obs(7, 1) = 12.0;
  const DetectionResult longer = detect(boundary, obs, 0);
  REQUIRE(longer.alarms.size() == 1);
  CHECK(longer.alarms[0].row == 5);
  CHECK(longer.alarms[0].run_length == 5);

  CHECK(detect(boundary, obs, 4).alarms.size() == 1);
  CHECK(detect(boundary, obs, 4).alarms[0].row == 6);
  CHECK(detect(boundary, obs, 6).alarms.empty());
}

TEST_CASE("observations at the median raise no alarms") {
  const ForecastEnsemble e = sample_ppt(point_mass(support::two_region_truth()), ConvolutionModel{},
                                        support::path_graph(2), day_range(0.0, 30), 100, 2);
  const DetectionResult r = detect(e, e.p50, 0);
  CHECK(r.outliers.empty());
  CHECK(r.alarms.empty());
  CHECK(r.boundary == e.percentile(0.99));
}

TEST_CASE("raising observations never removes outliers") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd boundary(40, 3), obs(40, 3);
  for (Eigen::Index i = 0; i < boundary.size(); ++i) {
    boundary.data()[i] = 1.0 + 0.2 * n(rng);
    obs.data()[i] = n(rng);
  }
  auto count = [&](const Eigen::MatrixXd& o) { return detect(boundary, o, 0).outliers; };
  auto base = count(obs);
  for (int step = 0; step < 10; ++step) {
    Eigen::MatrixXd raised = obs;
    for (Eigen::Index i = 0; i < raised.size(); ++i) raised.data()[i] += std::abs(n(rng));
    const auto higher = count(raised);
    for (const auto& o : base) CHECK(std::find(higher.begin(), higher.end(), o) != higher.end());
    obs = raised;
    base = higher;
  }
}

TEST_CASE("exceedance") {
  const Eigen::MatrixXd boundary = constant_boundary(20, 2, 8.0);
  ExceedanceMap m = exceedance(boundary, boundary, 5, 14);
  CHECK(m.gamma.rows() == 14);
  CHECK(m.mean_exceedance[0] == doctest::Approx(1.0));
  CHECK(m.mean_exceedance[1] == doctest::Approx(1.0));
  m = exceedance(boundary, Eigen::MatrixXd::Zero(20, 2), 5, 14);
  CHECK(m.mean_exceedance[0] == 0.0);

  Eigen::MatrixXd b = boundary;
  b(6, 1) = -1.0;
  b(7, 1) = 0.0;
  Eigen::MatrixXd obs = boundary * 2.0;
  obs(8, 1) = std::nan("");
  m = exceedance(b, obs, 5, 14);
  CHECK(m.excluded_days[0] == 0);
  CHECK(m.excluded_days[1] == 3);
  CHECK(std::isnan(m.gamma(1, 1)));
  CHECK(m.mean_exceedance[1] == doctest::Approx(2.0));

  obs(10, 0) = -5.0;
  m = exceedance(boundary, obs, 5, 14);
  CHECK(m.gamma(5, 0) == 0.0);
}

TEST_CASE("z_score drops constant columns") {
  Eigen::MatrixXd f(4, 3);
  f << 1, 5, 2, 2, 5, 4, 3, 5, 6, 4, 5, 8;
  std::vector<int> dropped;
  const Eigen::MatrixXd z = z_score(f, &dropped);
  REQUIRE(dropped == std::vector<int>{1});
  REQUIRE(z.cols() == 2);
  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(std::abs(z.col(j).mean()) < 1e-14);
    CHECK((z.col(j).array().square().sum() / 3.0) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("agglomeration matches a naive implementation") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Linkage linkage : {Linkage::complete, Linkage::single, Linkage::average}) {
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd x(10, 3);
      for (auto& v : x.reshaped()) v = n(rng);
      const std::vector<Merge> merges = agglomerate(x, linkage);
      const std::vector<NaiveMerge> oracle = naive_agglomerate(x, linkage);
      REQUIRE(merges.size() == oracle.size());
      std::vector<Members> nodes;
      for (int i = 0; i < 10; ++i) nodes.push_back({i});
      for (std::size_t k = 0; k < merges.size(); ++k) {
        const Members& a = nodes[static_cast<std::size_t>(merges[k].left)];
        const Members& b = nodes[static_cast<std::size_t>(merges[k].right)];
        const bool same = (a == oracle[k].a && b == oracle[k].b) || (a == oracle[k].b && b == oracle[k].a);
        CHECK(same);
        CHECK(merges[k].height == doctest::Approx(oracle[k].height).epsilon(1e-12));
        Members merged = a;
        merged.insert(b.begin(), b.end());
        CHECK(merges[k].size == static_cast<int>(merged.size()));
        nodes.push_back(merged);
        if (k > 0) CHECK(merges[k].height >= merges[k - 1].height);
      }
    }
  }
}

TEST_CASE("well separated groups form two clusters") {
  Eigen::MatrixXd f(6, 2);
  f << 0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 1.0, 1.0, 1.1, 1.0, 1.0, 1.1;
  for (double cut : {0.25, 0.4, 0.6, 0.75}) {
    const ClusterResult r = cluster_regions(f, cut);
    CHECK(r.cluster_count == 2);
    CHECK(r.labels == std::vector<int>{1, 1, 1, 2, 2, 2});
  }
}

TEST_CASE("identical features give a single cluster") {
  const ClusterResult r = cluster_regions(Eigen::MatrixXd::Constant(5, 3, 2.5));
  CHECK(r.cluster_count == 1);
  CHECK(r.labels == std::vector<int>(5, 1));
  CHECK(r.dropped_columns.size() == 3);
}

TEST_CASE("labels are invariant under affine rescaling of a feature") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd f(12, 3);
  for (auto& v : f.reshaped()) v = n(rng);
  Eigen::MatrixXd g = f;
  g.col(1) = 250.0 * g.col(1).array() + 17.0;
  g.col(2) = 0.01 * g.col(2).array() - 3.0;
  CHECK(cluster_regions(f).labels == cluster_regions(g).labels);
  CHECK(cluster_regions(f, 0.5, CutMode::quantile).labels == cluster_regions(g, 0.5, CutMode::quantile).labels);
}

TEST_CASE("cut_tree and parsing") {
  // Leaves 0..3: {0,1} at 1, {2,3} at 2, all at 5.
  const std::vector<Merge> merges = {{0, 1, 1.0, 2}, {2, 3, 2.0, 2}, {4, 5, 5.0, 4}};
  CHECK(cut_tree(merges, 4, 0.5) == std::vector<int>{1, 2, 3, 4});
  CHECK(cut_tree(merges, 4, 1.0) == std::vector<int>{1, 1, 2, 3});
  CHECK(cut_tree(merges, 4, 3.0) == std::vector<int>{1, 1, 2, 2});
  CHECK(cut_tree(merges, 4, 5.0) == std::vector<int>{1, 1, 1, 1});
  CHECK(parse_linkage("single") == Linkage::single);
  CHECK(parse_cut_mode("quantile") == CutMode::quantile);
  CHECK_THROWS(parse_linkage("ward"));
}
