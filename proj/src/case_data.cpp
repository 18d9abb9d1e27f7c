#include "epifield/case_data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "epifield/csv.hpp"
#include "epifield/errors.hpp"

namespace epifield {

Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw DataError("malformed date '" + text + "' (expected YYYY-MM-DD)");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw DataError("invalid calendar date '" + text + "'");
  return Date{ymd};
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

double day_offset(Date date, Date reference) { return static_cast<double>((date - reference).count()); }

Eigen::Index CaseData::row_of(Date date) const {
  if (dates.empty()) return -1;
  const auto offset = (date - dates.front()).count();
  if (offset < 0 || offset >= static_cast<long>(dates.size())) return -1;
  return static_cast<Eigen::Index>(offset);
}

std::vector<double> CaseData::day_offsets(Date reference) const {
  std::vector<double> out;
  out.reserve(dates.size());
  for (Date d : dates) out.push_back(day_offset(d, reference));
  return out;
}

CaseData CaseData::slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > day_count()) throw std::out_of_range("CaseData::slice out of range");
  CaseData out;
  out.dates.assign(dates.begin() + first, dates.begin() + first + count);
  out.region_ids = region_ids;
  out.counts = counts.middleRows(first, count);
  out.smoothed = smoothed;
  return out;
}

CaseData CaseData::select_regions(const std::vector<std::size_t>& columns) const {
  CaseData out;
  out.dates = dates;
  out.smoothed = smoothed;
  out.counts.resize(counts.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out.region_ids.push_back(region_ids.at(columns[k]));
    out.counts.col(static_cast<Eigen::Index>(k)) = counts.col(static_cast<Eigen::Index>(columns[k]));
  }
  return out;
}

CaseData read_cases(std::istream& in, const RegionGraph& graph, IngestReport* report) {
  const CsvTable table = read_csv(in);
  const std::size_t c_date = table.column("date");
  const std::size_t c_region = table.column("region_id");
  const std::size_t c_count = table.column("count");

  std::map<std::pair<Date, int>, double> cells;
  std::set<std::string> unknown;
  Date first = Date::max();
  Date last = Date::min();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const Date date = parse_date(row[c_date]);
    const int region = graph.index_of(row[c_region]);
    if (region < 0) {
      unknown.insert(row[c_region]);
      continue;
    }
    const double count = parse_number(row[c_count], "count on line " + std::to_string(i + 2));
    if (count < 0.0) {
      throw DataError("negative count " + row[c_count] + " for " + row[c_region] + " on " + row[c_date]);
    }
    if (!cells.emplace(std::pair{date, region}, count).second) {
      throw DataError("duplicate row for region " + row[c_region] + " on " + row[c_date]);
    }
    first = std::min(first, date);
    last = std::max(last, date);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
    throw DataError("unknown region ids in case file: " + list);
  }
  if (cells.empty()) throw DataError("case file has no rows");

  CaseData data;
  data.region_ids = graph.ids();
  const auto n_days = (last - first).count() + 1;
  for (long k = 0; k < n_days; ++k) data.dates.push_back(first + std::chrono::days{k});
  data.counts = Eigen::MatrixXd::Zero(n_days, static_cast<Eigen::Index>(graph.size()));
  for (const auto& [key, value] : cells) data.counts((key.first - first).count(), key.second) = value;

  const int filled = static_cast<int>(n_days * static_cast<long>(graph.size()) - static_cast<long>(cells.size()));
  if (filled > 0) std::cerr << "warning: " << filled << " missing (date, region) cells filled with 0\n";
  if (report != nullptr) {
    report->filled_cells = filled;
    report->rows_read = static_cast<int>(table.rows.size());
  }
  return data;
}

CaseData ingest_cases(const std::string& path, const RegionGraph& graph, IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open case file " + path);
  return read_cases(in, graph, report);
}

void write_cases(std::ostream& out, const CaseData& data) {
  out << "date,region_id,count\n";
  for (Eigen::Index i = 0; i < data.day_count(); ++i) {
    const std::string date = format_date(data.dates[i]);
    for (Eigen::Index r = 0; r < data.counts.cols(); ++r) {
      out << date << ',' << data.region_ids[r] << ',' << format_number(data.counts(i, r)) << '\n';
    }
  }
}

CaseData smooth(const CaseData& data, int window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("smoothing window must be odd and positive");
  if (window > data.day_count()) throw DataError("smoothing window exceeds the number of days");
  const Eigen::Index half = window / 2;
  const Eigen::Index n = data.day_count();
  CaseData out = data;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
    out.counts.row(i) = data.counts.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  out.smoothed = true;
  return out;
}

}  // namespace epifield
