#pragma once

#include <string>
#include <vector>

#include "epifield/case_data.hpp"
#include "epifield/config.hpp"
#include "epifield/posterior.hpp"
#include "epifield/predictive.hpp"
#include "epifield/vi.hpp"

namespace epifield {

/// Loaded graph and case series for one configured run.
struct PipelineInputs {
  RunConfig config;
  RegionGraph graph;
  CaseData raw;
  CaseData series;  // smoothed unless running on raw counts
  bool raw_mode = false;
  Date reference;
  Date fit_start;
  Date fit_end;
  std::string input_hash;

  std::vector<std::string> region_ids() const { return graph.ids(); }
  /// Fit window followed by the forecast days.
  std::vector<Date> horizon_dates() const;
  std::vector<double> horizon_days() const;
  Eigen::Index first_forecast_row() const;
};

PipelineInputs load_inputs(const RunConfig& config, bool raw_mode);

/// Hash of the configuration (seed and thread count excluded) and every input file.
std::string input_hash(const RunConfig& config, bool raw_mode);

ModelContext fit_context(const PipelineInputs& inputs);

/// Rows of `data` at `dates`; NaN where the series has no such day.
Eigen::MatrixXd observations_on(const CaseData& data, const std::vector<Date>& dates);

struct StoredFit {
  std::string input_hash;
  std::vector<std::string> region_ids;
  VariationalState state;
  Eigen::VectorXd mle_xhat;
};

std::string fit_to_json(const VariationalFit& fit, const PipelineInputs& inputs, const std::string& trace_file);
StoredFit parse_fit_json(const std::string& text);
/// Throws DataError when the fit was produced from different inputs.
void check_fit_matches(const StoredFit& fit, const PipelineInputs& inputs);

ForecastEnsemble forecast_from_fit(const StoredFit& fit, const PipelineInputs& inputs);

}  // namespace epifield
