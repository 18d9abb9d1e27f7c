#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "epifield/graph.hpp"
#include "epifield/model.hpp"
#include "epifield/params.hpp"

namespace epifield {

/// An additional Gamma pulse superposed on one region's expected counts.
struct ExtraWave {
  std::size_t region = 0;
  RegionParams pulse;
};

struct SyntheticData {
  Eigen::MatrixXd observed;  // days x regions
  Eigen::MatrixXd expected;  // noise-free counts, including extra waves
  ParamVector truth;
  std::vector<ExtraWave> extra_waves;
};

/// Expected counts of `truth` plus any extra waves, noise-free.
Eigen::MatrixXd synthetic_expected(const ParamVector& truth, const ConvolutionModel& model,
                                   const std::vector<double>& days, const std::vector<ExtraWave>& extra_waves = {});

/// Expected counts plus eps_i ~ N(0, Sigma_i(truth)); negatives floored at 0 unless disabled.
SyntheticData generate_synthetic(const ParamVector& truth, const RegionGraph& graph, const ConvolutionModel& model,
                                 const std::vector<double>& days, std::uint64_t seed,
                                 const std::vector<ExtraWave>& extra_waves = {}, bool floor_at_zero = true);

}  // namespace epifield
