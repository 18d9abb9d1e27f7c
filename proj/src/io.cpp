#include "epifield/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "epifield/csv.hpp"
#include "epifield/errors.hpp"

namespace epifield {

std::vector<RegionInfo> read_regions(const std::string& path) {
  const CsvTable table = read_csv_file(path);
  const std::size_t c_id = table.column("region_id");
  const std::size_t c_name = table.column("name");
  const std::size_t c_lat = table.column("lat");
  const std::size_t c_lon = table.column("lon");
  const std::size_t c_pop = table.column("population");
  std::vector<RegionInfo> regions;
  for (const auto& row : table.rows) {
    RegionInfo info;
    info.id = row[c_id];
    info.name = row[c_name];
    info.lat = parse_number(row[c_lat], "lat of " + info.id);
    info.lon = parse_number(row[c_lon], "lon of " + info.id);
    info.population = parse_number(row[c_pop], "population of " + info.id);
    regions.push_back(info);
  }
  return regions;
}

std::vector<std::pair<std::string, std::string>> read_edges(const std::string& path) {
  const CsvTable table = read_csv_file(path);
  const std::size_t a = table.column("region_a");
  const std::size_t b = table.column("region_b");
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& row : table.rows) edges.emplace_back(row[a], row[b]);
  return edges;
}

RegionGraph load_graph(const std::string& regions_path, const std::string& edges_path) {
  auto regions = read_regions(regions_path);
  const auto edges = edges_path.empty() ? std::vector<std::pair<std::string, std::string>>{} : read_edges(edges_path);
  try {
    return RegionGraph(std::move(regions), edges);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

void write_forecast_csv(std::ostream& out, const ForecastEnsemble& ensemble, const std::vector<Date>& dates,
                        const std::vector<std::string>& region_ids) {
  out << "region_id,date,p05,p25,p50,p75,p95,pf_p50\n";
  for (Eigen::Index r = 0; r < ensemble.region_count(); ++r) {
    for (Eigen::Index i = 0; i < ensemble.day_count(); ++i) {
      out << csv_field(region_ids[r]) << ',' << format_date(dates[i]) << ',' << format_number(ensemble.p05(i, r))
          << ',' << format_number(ensemble.p25(i, r)) << ',' << format_number(ensemble.p50(i, r)) << ','
          << format_number(ensemble.p75(i, r)) << ',' << format_number(ensemble.p95(i, r)) << ','
          << format_number(ensemble.pf_p50(i, r)) << '\n';
    }
  }
}

void write_crps_csv(std::ostream& out, const std::vector<std::string>& region_ids, const Eigen::VectorXd& crps,
                    const Eigen::VectorXd& totals, const Eigen::VectorXd& ratio) {
  out << "region_id,C_r,T_r,rho_r\n";
  for (std::size_t r = 0; r < region_ids.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    out << csv_field(region_ids[r]) << ',' << format_number(crps[i]) << ',' << format_number(totals[i]) << ','
        << format_number(ratio[i]) << '\n';
  }
}

void write_alarms_csv(std::ostream& out, const DetectionResult& result, const std::vector<Date>& dates,
                      const std::vector<std::string>& region_ids) {
  out << "region_id,alarm_date,run_length\n";
  for (const Alarm& a : result.alarms) {
    out << csv_field(region_ids[a.region]) << ',' << format_date(dates[a.row]) << ',' << a.run_length << '\n';
  }
}

void write_exceedance_csv(std::ostream& out, const ExceedanceMap& map, const std::vector<std::string>& region_ids) {
  out << "region_id,mean_exceedance,excluded_days\n";
  for (std::size_t r = 0; r < region_ids.size(); ++r) {
    out << csv_field(region_ids[r]) << ',' << format_number(map.mean_exceedance[static_cast<Eigen::Index>(r)]) << ','
        << map.excluded_days[r] << '\n';
  }
}

void write_clusters_csv(std::ostream& out, const ClusterResult& result, const std::vector<std::string>& region_ids) {
  out << "region_id,cluster_label\n";
  for (std::size_t r = 0; r < region_ids.size(); ++r) out << csv_field(region_ids[r]) << ',' << result.labels[r] << '\n';
}

std::string dendrogram_json(const ClusterResult& result, const std::vector<std::string>& region_ids) {
  nlohmann::json j;
  j["leaves"] = region_ids;
  j["cut_height"] = result.cut_height;
  j["dropped_columns"] = result.dropped_columns;
  nlohmann::json merges = nlohmann::json::array();
  for (const Merge& m : result.merges) {
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  }
  j["merges"] = merges;
  return j.dump(2) + "\n";
}

void write_trace_csv(std::ostream& out, const ElboTrace& trace) {
  out << "iteration,elbo,grad_norm,seconds,n_samples\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << trace.iteration[k] << ',' << format_number(trace.elbo[k]) << ',' << format_number(trace.grad_norm[k]) << ','
        << format_number(trace.seconds[k]) << ',' << trace.n_samples[k] << '\n';
  }
}

void write_chain_summary_csv(std::ostream& out, const std::vector<ParameterSummary>& rows) {
  out << "parameter,mean,sd,q05,q50,q95\n";
  for (const auto& s : rows) {
    out << csv_field(s.name) << ',' << format_number(s.mean) << ',' << format_number(s.sd) << ','
        << format_number(s.q05) << ',' << format_number(s.q50) << ',' << format_number(s.q95) << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<ParameterComparison>& rows) {
  out << "parameter,space,mcmc_mean,mcmc_sd,vi_mean,vi_sd,mean_gap_in_mcmc_sd\n";
  for (const auto& row : rows) {
    for (const auto& [space, g] : {std::pair{"unconstrained", row.unconstrained}, std::pair{"constrained", row.constrained}}) {
      out << csv_field(row.name) << ',' << space << ',' << format_number(g.mcmc_mean) << ',' << format_number(g.mcmc_sd)
          << ',' << format_number(g.vi_mean) << ',' << format_number(g.vi_sd) << ','
          << format_number(g.mean_gap_in_mcmc_sd) << '\n';
    }
  }
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

}  // namespace epifield
