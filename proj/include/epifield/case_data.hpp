#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <iosfwd>
#include <string>
#include <vector>

#include "epifield/graph.hpp"

namespace epifield {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD; throws DataError on malformed or impossible dates.
Date parse_date(const std::string& text);
std::string format_date(Date date);
/// Whole days from `reference` to `date`.
double day_offset(Date date, Date reference);

/// Daily counts on a gap-free date axis; columns follow `region_ids`.
struct CaseData {
  std::vector<Date> dates;
  std::vector<std::string> region_ids;
  Eigen::MatrixXd counts;  // days x regions
  bool smoothed = false;

  Eigen::Index day_count() const { return counts.rows(); }
  /// Row of `date`, or -1.
  Eigen::Index row_of(Date date) const;
  std::vector<double> day_offsets(Date reference) const;
  /// Rows [first, first + count).
  CaseData slice(Eigen::Index first, Eigen::Index count) const;
  /// Columns in the given order.
  CaseData select_regions(const std::vector<std::size_t>& columns) const;
};

struct IngestReport {
  int filled_cells = 0;
  int rows_read = 0;
};

/// Reads `date,region_id,count` rows and pivots them into graph order.
CaseData read_cases(std::istream& in, const RegionGraph& graph, IngestReport* report = nullptr);
CaseData ingest_cases(const std::string& path, const RegionGraph& graph, IngestReport* report = nullptr);
void write_cases(std::ostream& out, const CaseData& data);

/// Centered moving average of odd width; windows are truncated at the series edges.
CaseData smooth(const CaseData& data, int window);

}  // namespace epifield
