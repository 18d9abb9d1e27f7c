#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace epifield {

struct RegionInfo {
  std::string id;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  double population = 0.0;
};

/// Ordered set of regions with a symmetric 0/1 adjacency and zero diagonal.
class RegionGraph {
 public:
  RegionGraph() = default;
  RegionGraph(std::vector<RegionInfo> regions,
              const std::vector<std::pair<std::string, std::string>>& edges);
  RegionGraph(std::vector<RegionInfo> regions, Eigen::MatrixXd adjacency);

  /// Regions named by id only, with metadata left at defaults.
  static RegionGraph from_ids(const std::vector<std::string>& ids,
                              const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t size() const { return regions_.size(); }
  const std::vector<RegionInfo>& regions() const { return regions_; }
  const RegionInfo& region(std::size_t i) const { return regions_.at(i); }
  std::vector<std::string> ids() const;

  /// Index of `id`, or -1 when absent.
  int index_of(const std::string& id) const;

  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  const Eigen::VectorXd& degrees() const { return degrees_; }

  /// Graph restricted to the given region indices, in that order.
  RegionGraph subset(const std::vector<std::size_t>& indices) const;

  std::vector<std::pair<std::string, std::string>> edge_list() const;

 private:
  void validate_and_finish();

  std::vector<RegionInfo> regions_;
  Eigen::MatrixXd adjacency_;
  Eigen::VectorXd degrees_;
};

}  // namespace epifield
