#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "epifield/mcmc.hpp"
#include "epifield/model.hpp"
#include "epifield/params.hpp"
#include "epifield/quadrature.hpp"
#include "epifield/transforms.hpp"
#include "epifield/vi.hpp"

namespace epifield {

struct DataPaths {
  std::string cases;
  std::string regions;
  std::string edges;
};

struct FitWindow {
  std::string start;
  std::string end;
};

struct PredictiveConfig {
  int draws = 100;
};

struct SurveillanceConfig {
  double boundary_level = 0.99;
  int run_length = 3;
  int n_smooth = 14;
  std::string linkage = "complete";
  std::string cut_mode = "fraction";
  double cut = 0.6;
};

struct RegionTruth {
  std::string region_id;
  RegionParams params;
};

/// Inputs of the `simulate` command.
struct SimulationConfig {
  std::string start_date;
  int n_days = 0;
  std::vector<RegionTruth> regions;
  NoiseParams noise;
  std::vector<RegionTruth> extra_waves;
  bool floor_at_zero = true;
};

struct RunConfig {
  /// Day offsets are measured from this date; empty means the fit-window start.
  std::string reference_date;
  FitWindow fit_window;
  int forecast_days = 14;
  int smoothing_window = 7;
  QuadratureOptions quadrature;
  IncubationParams incubation;
  /// t0 prior mean is relative to the fit-window start.
  PriorSpec prior;
  TransformOptions transforms;
  OptimizerConfig optimizer;
  MleConfig mle;
  AmcmcConfig mcmc;
  PredictiveConfig predictive;
  SurveillanceConfig surveillance;
  bool crps_on_raw = false;
  bool detect_on_raw = false;
  std::uint64_t seed = 20200601;
  std::size_t threads = 0;
  DataPaths data;
  std::vector<std::string> region_subset;
  std::optional<SimulationConfig> simulation;

  /// Directory that relative data paths resolve against.
  std::filesystem::path base_dir;

  std::string resolve(const std::string& path) const;
  /// Seeds of the individual stages, derived from `seed`.
  std::uint64_t optimizer_seed() const { return seed; }
  std::uint64_t predictive_seed() const { return seed + 1; }
  std::uint64_t mcmc_seed() const { return seed + 2; }
  std::uint64_t simulation_seed() const { return seed + 3; }

  void validate() const;
};

/// Parses a JSON document; absent fields keep their defaults. Throws DataError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON with every field explicit.
std::string config_to_json(const RunConfig& config, int indent = 2);

}  // namespace epifield
