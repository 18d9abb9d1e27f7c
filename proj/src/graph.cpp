#include "epifield/graph.hpp"

#include <stdexcept>
#include <unordered_set>

namespace epifield {

RegionGraph::RegionGraph(std::vector<RegionInfo> regions,
                         const std::vector<std::pair<std::string, std::string>>& edges)
    : regions_(std::move(regions)) {
  const auto n = static_cast<Eigen::Index>(regions_.size());
  adjacency_ = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : edges) {
    const int i = index_of(a);
    const int j = index_of(b);
    if (i < 0 || j < 0) {
      throw std::invalid_argument("RegionGraph: edge references unknown region " + (i < 0 ? a : b));
    }
    if (i == j) throw std::invalid_argument("RegionGraph: self-loop on region " + a);
    adjacency_(i, j) = 1.0;
    adjacency_(j, i) = 1.0;
  }
  validate_and_finish();
}

RegionGraph::RegionGraph(std::vector<RegionInfo> regions, Eigen::MatrixXd adjacency)
    : regions_(std::move(regions)), adjacency_(std::move(adjacency)) {
  validate_and_finish();
}

RegionGraph RegionGraph::from_ids(const std::vector<std::string>& ids,
                                  const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<RegionInfo> regions;
  regions.reserve(ids.size());
  for (const auto& id : ids) regions.push_back({id, id, 0.0, 0.0, 0.0});
  return RegionGraph(std::move(regions), edges);
}

void RegionGraph::validate_and_finish() {
  const auto n = static_cast<Eigen::Index>(regions_.size());
  if (adjacency_.rows() != n || adjacency_.cols() != n) {
    throw std::invalid_argument("RegionGraph: adjacency shape does not match region count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& r : regions_) {
    if (!seen.insert(r.id).second) throw std::invalid_argument("RegionGraph: duplicate region id " + r.id);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency_(i, i) != 0.0) throw std::invalid_argument("RegionGraph: adjacency diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = adjacency_(i, j);
      if (w != 0.0 && w != 1.0) throw std::invalid_argument("RegionGraph: adjacency must be 0/1");
      if (w != adjacency_(j, i)) throw std::invalid_argument("RegionGraph: adjacency must be symmetric");
    }
  }
  degrees_ = adjacency_.rowwise().sum();
}

std::vector<std::string> RegionGraph::ids() const {
  std::vector<std::string> out;
  out.reserve(regions_.size());
  for (const auto& r : regions_) out.push_back(r.id);
  return out;
}

int RegionGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (regions_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

RegionGraph RegionGraph::subset(const std::vector<std::size_t>& indices) const {
  std::vector<RegionInfo> regions;
  const auto n = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    regions.push_back(regions_.at(indices[a]));
    for (Eigen::Index b = 0; b < n; ++b) {
      w(a, b) = adjacency_(static_cast<Eigen::Index>(indices[a]), static_cast<Eigen::Index>(indices[b]));
    }
  }
  return RegionGraph(std::move(regions), std::move(w));
}

std::vector<std::pair<std::string, std::string>> RegionGraph::edge_list() const {
  std::vector<std::pair<std::string, std::string>> out;
  const auto n = static_cast<Eigen::Index>(regions_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (adjacency_(i, j) != 0.0) out.emplace_back(regions_[i].id, regions_[j].id);
    }
  }
  return out;
}

}  // namespace epifield
