#pragma once

#include <string>
#include <vector>

#include "epifield/case_data.hpp"
#include "epifield/predictive.hpp"
#include "epifield/vi.hpp"

namespace epifield {

/// One panel per region: p05/p95 dashed, inter-quartile band, median line, observation markers.
std::string fantail_svg(const ForecastEnsemble& ensemble, const Eigen::MatrixXd& observed,
                        const std::vector<Date>& dates, const std::vector<std::string>& region_names,
                        Eigen::Index first_forecast_row);

/// Objective and gradient norm (log scale) against iteration.
std::string trace_svg(const ElboTrace& trace);

}  // namespace epifield
