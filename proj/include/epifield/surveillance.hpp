#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "epifield/predictive.hpp"

namespace epifield {

struct DetectionOptions {
  double boundary_level = 0.99;
  int run_length = 3;
};

struct Alarm {
  Eigen::Index region = 0;
  Eigen::Index row = 0;  // ensemble day index of the alarm
  int run_length = 0;    // full length of the outlier run containing the alarm
};

struct DetectionResult {
  Eigen::MatrixXd boundary;  // days x regions
  std::vector<std::pair<Eigen::Index, Eigen::Index>> outliers;  // (region, row)
  std::vector<Alarm> alarms;
};

/// Outliers are observations above the boundary on rows >= first_forecast_row; an alarm
/// is dated at the `run_length`-th consecutive outlier.
DetectionResult detect(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& observed, Eigen::Index first_forecast_row,
                       const DetectionOptions& options = {});
DetectionResult detect(const ForecastEnsemble& ensemble, const Eigen::MatrixXd& observed,
                       Eigen::Index first_forecast_row, const DetectionOptions& options = {});

struct ExceedanceMap {
  Eigen::MatrixXd gamma;              // window days x regions; NaN where undefined
  Eigen::VectorXd mean_exceedance;
  std::vector<int> excluded_days;
};

ExceedanceMap exceedance(const Eigen::MatrixXd& boundary, const Eigen::MatrixXd& observed, Eigen::Index start_row,
                         int n_smooth);
ExceedanceMap exceedance(const ForecastEnsemble& ensemble, const Eigen::MatrixXd& observed, Eigen::Index start_row,
                         int n_smooth, double boundary_level = 0.99);

enum class Linkage { complete, single, average };
enum class CutMode { fraction, quantile };

Linkage parse_linkage(const std::string& name);
CutMode parse_cut_mode(const std::string& name);

/// Node ids: leaves are 0..R-1, the k-th merge creates node R + k.
struct Merge {
  int left = 0;
  int right = 0;
  double height = 0.0;
  int size = 0;
};

struct ClusterResult {
  std::vector<Merge> merges;  // nondecreasing heights
  std::vector<int> labels;    // 1-based, numbered by first appearance
  std::vector<int> dropped_columns;
  double cut_height = 0.0;
  int cluster_count = 0;
};

/// Column-wise (x - mean) / sd with sd over n-1; constant columns are dropped.
Eigen::MatrixXd z_score(const Eigen::MatrixXd& features, std::vector<int>* dropped = nullptr);

/// Agglomerative clustering by nearest-neighbour chains on Euclidean distance.
std::vector<Merge> agglomerate(const Eigen::MatrixXd& points, Linkage linkage = Linkage::complete);

/// Flat clusters from merges at or below `height`.
std::vector<int> cut_tree(const std::vector<Merge>& merges, int leaves, double height);

/// Z-score, agglomerate and cut at `cut` (fraction of the top merge height or quantile of merge heights).
ClusterResult cluster_regions(const Eigen::MatrixXd& features, double cut = 0.6, CutMode mode = CutMode::fraction,
                              Linkage linkage = Linkage::complete);

}  // namespace epifield
