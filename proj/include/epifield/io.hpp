#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "epifield/case_data.hpp"
#include "epifield/graph.hpp"
#include "epifield/mcmc.hpp"
#include "epifield/predictive.hpp"
#include "epifield/surveillance.hpp"
#include "epifield/vi.hpp"

namespace epifield {

/// regions.csv: region_id,name,lat,lon,population
std::vector<RegionInfo> read_regions(const std::string& path);
/// edges.csv: region_a,region_b
std::vector<std::pair<std::string, std::string>> read_edges(const std::string& path);
RegionGraph load_graph(const std::string& regions_path, const std::string& edges_path);

std::string read_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

void write_forecast_csv(std::ostream& out, const ForecastEnsemble& ensemble, const std::vector<Date>& dates,
                        const std::vector<std::string>& region_ids);
void write_crps_csv(std::ostream& out, const std::vector<std::string>& region_ids, const Eigen::VectorXd& crps,
                    const Eigen::VectorXd& totals, const Eigen::VectorXd& ratio);
void write_alarms_csv(std::ostream& out, const DetectionResult& result, const std::vector<Date>& dates,
                      const std::vector<std::string>& region_ids);
void write_exceedance_csv(std::ostream& out, const ExceedanceMap& map, const std::vector<std::string>& region_ids);
void write_clusters_csv(std::ostream& out, const ClusterResult& result, const std::vector<std::string>& region_ids);
std::string dendrogram_json(const ClusterResult& result, const std::vector<std::string>& region_ids);
void write_trace_csv(std::ostream& out, const ElboTrace& trace);
void write_chain_summary_csv(std::ostream& out, const std::vector<ParameterSummary>& rows);
void write_comparison_csv(std::ostream& out, const std::vector<ParameterComparison>& rows);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::string& path, const std::string& text);

}  // namespace epifield
