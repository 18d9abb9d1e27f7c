#include "epifield/surveillance.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "epifield/stats.hpp"

namespace epifield {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_aligned(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& observed) {
  if (boundary.rows() != observed.rows() || boundary.cols() != observed.cols()) {
    throw std::invalid_argument("observations do not align with the forecast boundary");
  }
}

double linkage_update(Linkage linkage, double d_ik, double d_jk, int size_i, int size_j) {
  switch (linkage) {
    case Linkage::complete: return std::max(d_ik, d_jk);
    case Linkage::single: return std::min(d_ik, d_jk);
    case Linkage::average: return (size_i * d_ik + size_j * d_jk) / (size_i + size_j);
  }
  return d_ik;
}

struct DisjointSets {
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  std::vector<int> parent;
};

}  // namespace

DetectionResult detect(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& observed, Eigen::Index first_forecast_row,
                       const DetectionOptions& options) {
  check_aligned(boundary, observed);
  if (options.run_length < 1) throw std::invalid_argument("detect: run_length must be >= 1");
  DetectionResult result;
  result.boundary = boundary;
  const Eigen::Index start = std::max<Eigen::Index>(first_forecast_row, 0);
  for (Eigen::Index r = 0; r < observed.cols(); ++r) {
    int run = 0;
    std::size_t open_alarm = 0;
    bool alarm_open = false;
    for (Eigen::Index i = start; i < observed.rows(); ++i) {
      const bool outlier = !std::isnan(observed(i, r)) && observed(i, r) > boundary(i, r);
      if (!outlier) {
        run = 0;
        alarm_open = false;
        continue;
      }
      result.outliers.emplace_back(r, i);
      ++run;
      if (run == options.run_length) {
        result.alarms.push_back({r, i, run});
        open_alarm = result.alarms.size() - 1;
        alarm_open = true;
      } else if (alarm_open) {
        result.alarms[open_alarm].run_length = run;
      }
    }
  }
  return result;
}

DetectionResult detect(const ForecastEnsemble& ensemble, const Eigen::MatrixXd& observed,
                       Eigen::Index first_forecast_row, const DetectionOptions& options) {
  return detect(ensemble.percentile(options.boundary_level), observed, first_forecast_row, options);
}

ExceedanceMap exceedance(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& observed, Eigen::Index start_row,
                         int n_smooth) {
  check_aligned(boundary, observed);
  if (n_smooth < 1) throw std::invalid_argument("exceedance: n_smooth must be >= 1");
  if (start_row < 0 || start_row + n_smooth > observed.rows()) {
    throw std::invalid_argument("exceedance: window extends beyond the forecast horizon");
  }
  ExceedanceMap map;
  map.gamma = Eigen::MatrixXd::Constant(n_smooth, observed.cols(), kNaN);
  map.mean_exceedance = Eigen::VectorXd::Constant(observed.cols(), kNaN);
  map.excluded_days.assign(static_cast<std::size_t>(observed.cols()), 0);
  for (Eigen::Index r = 0; r < observed.cols(); ++r) {
    double sum = 0.0;
    int used = 0;
    for (Eigen::Index k = 0; k < n_smooth; ++k) {
      const double b = boundary(start_row + k, r);
      const double y = observed(start_row + k, r);
      if (!(b > 0.0) || std::isnan(y)) {
        ++map.excluded_days[r];
        continue;
      }
      map.gamma(k, r) = std::max(y, 0.0) / b;
      sum += map.gamma(k, r);
      ++used;
    }
    if (used > 0) map.mean_exceedance[r] = sum / used;
  }
  return map;
}

ExceedanceMap exceedance(const ForecastEnsemble& ensemble, const Eigen::MatrixXd& observed, Eigen::Index start_row,
                         int n_smooth, double boundary_level) {
  return exceedance(ensemble.percentile(boundary_level), observed, start_row, n_smooth);
}

Linkage parse_linkage(const std::string& name) {
  if (name == "complete") return Linkage::complete;
  if (name == "single") return Linkage::single;
  if (name == "average") return Linkage::average;
  throw std::invalid_argument("unknown linkage '" + name + "' (expected complete, single or average)");
}

CutMode parse_cut_mode(const std::string& name) {
  if (name == "fraction") return CutMode::fraction;
  if (name == "quantile") return CutMode::quantile;
  throw std::invalid_argument("unknown cut mode '" + name + "' (expected fraction or quantile)");
}

Eigen::MatrixXd z_score(const Eigen::MatrixXd& features, std::vector<int>* dropped) {
  std::vector<Eigen::Index> keep;
  std::vector<double> means;
  std::vector<double> sds;
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    std::vector<double> col(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i) col[i] = features(i, c);
    const double m = mean(col);
    const double sd = std::sqrt(sample_variance(col));
    const double spread = features.col(c).maxCoeff() - features.col(c).minCoeff();
    if (!(sd > 0.0) || spread == 0.0) {
      std::cerr << "warning: feature column " << c << " has zero variance and is dropped\n";
      if (dropped != nullptr) dropped->push_back(static_cast<int>(c));
      continue;
    }
    keep.push_back(c);
    means.push_back(m);
    sds.push_back(sd);
  }
  Eigen::MatrixXd z(features.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    z.col(static_cast<Eigen::Index>(k)) = (features.col(keep[k]).array() - means[k]) / sds[k];
  }
  return z;
}

std::vector<Merge> agglomerate(const Eigen::MatrixXd& points, Linkage linkage) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) throw std::invalid_argument("agglomerate: need at least two points");
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist(i, j) = (points.row(i) - points.row(j)).norm();
  }

  // Nearest-neighbour chain; clusters are tracked by the slot of one representative leaf.
  std::vector<int> size(n, 1);
  std::vector<bool> active(n, true);
  struct RawMerge {
    int a, b;
    double height;
  };
  std::vector<RawMerge> raw;
  std::vector<int> chain;
  for (int step = 0; step < n - 1; ++step) {
    if (chain.empty()) {
      for (int i = 0; i < n; ++i) {
        if (active[i]) {
          chain.push_back(i);
          break;
        }
      }
    }
    while (true) {
      const int a = chain.back();
      const int prev = chain.size() > 1 ? chain[chain.size() - 2] : -1;
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      if (prev >= 0) {
        best = prev;
        best_d = dist(a, prev);
      }
      for (int k = 0; k < n; ++k) {
        if (!active[k] || k == a) continue;
        if (dist(a, k) < best_d) {
          best_d = dist(a, k);
          best = k;
        }
      }
      if (best == prev) {
        chain.pop_back();
        chain.pop_back();
        const int lo = std::min(a, prev);
        const int hi = std::max(a, prev);
        raw.push_back({lo, hi, best_d});
        for (int k = 0; k < n; ++k) {
          if (!active[k] || k == lo || k == hi) continue;
          const double d = linkage_update(linkage, dist(lo, k), dist(hi, k), size[lo], size[hi]);
          dist(lo, k) = dist(k, lo) = d;
        }
        size[lo] += size[hi];
        active[hi] = false;
        break;
      }
      chain.push_back(best);
    }
  }

  std::stable_sort(raw.begin(), raw.end(), [](const RawMerge& x, const RawMerge& y) { return x.height < y.height; });

  // Relabel representative slots into node ids.
  DisjointSets sets(n);
  std::vector<int> node_of(n);
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<int> count(n, 1);
  std::vector<Merge> merges;
  for (const RawMerge& m : raw) {
    const int ra = sets.find(m.a);
    const int rb = sets.find(m.b);
    Merge out;
    out.left = std::min(node_of[ra], node_of[rb]);
    out.right = std::max(node_of[ra], node_of[rb]);
    out.height = m.height;
    out.size = count[ra] + count[rb];
    sets.parent[rb] = ra;
    count[ra] = out.size;
    node_of[ra] = n + static_cast<int>(merges.size());
    merges.push_back(out);
  }
  return merges;
}

std::vector<int> cut_tree(const std::vector<Merge>& merges, int leaves, double height) {
  DisjointSets sets(leaves + static_cast<int>(merges.size()));
  for (std::size_t k = 0; k < merges.size(); ++k) {
    if (merges[k].height > height) continue;
    const int node = leaves + static_cast<int>(k);
    sets.parent[sets.find(merges[k].left)] = node;
    sets.parent[sets.find(merges[k].right)] = node;
  }
  std::vector<int> labels(leaves, 0);
  std::vector<int> label_of_root(sets.parent.size(), 0);
  int next = 0;
  for (int i = 0; i < leaves; ++i) {
    int& slot = label_of_root[sets.find(i)];
    if (slot == 0) slot = ++next;
    labels[i] = slot;
  }
  return labels;
}

ClusterResult cluster_regions(const Eigen::MatrixXd& features, double cut, CutMode mode, Linkage linkage) {
  const int n = static_cast<int>(features.rows());
  if (n < 2) throw std::invalid_argument("cluster_regions: need at least two regions");
  ClusterResult result;
  const Eigen::MatrixXd z = z_score(features, &result.dropped_columns);
  const Eigen::MatrixXd points = z.cols() > 0 ? z : Eigen::MatrixXd::Zero(n, 1);
  result.merges = agglomerate(points, linkage);
  std::vector<double> heights;
  for (const Merge& m : result.merges) heights.push_back(m.height);
  if (mode == CutMode::fraction) {
    result.cut_height = cut * heights.back();
  } else {
    result.cut_height = quantile(heights, cut);
  }
  result.labels = cut_tree(result.merges, n, result.cut_height);
  result.cluster_count = *std::max_element(result.labels.begin(), result.labels.end());
  return result;
}

}  // namespace epifield
