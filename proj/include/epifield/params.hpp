#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epifield/model.hpp"

namespace epifield {

/// Global noise parameters of the observation model.
struct NoiseParams {
  double tau = 1.0;      // GMRF magnitude
  double lambda = 0.5;   // GMRF coupling
  double sigma_a = 1.0;  // additive scale, cases
  double sigma_m = 0.3;  // multiplicative scale

  bool operator==(const NoiseParams&) const = default;
};

enum NoiseSlot : int { kSlotTau = 0, kSlotLambda = 1, kSlotSigmaA = 2, kSlotSigmaM = 3 };

inline constexpr int kParamsPerRegion = 4;
inline constexpr int kNoiseParams = 4;

/// Full constrained parameter set, laid out as [m_1 ... m_R, eta] when flattened,
/// with m_r = (t0, N, k, theta) and eta = (tau, lambda, sigma_a, sigma_m).
struct ParamVector {
  std::vector<RegionParams> regions;
  NoiseParams noise;

  std::size_t region_count() const { return regions.size(); }
  std::size_t dimension() const { return kParamsPerRegion * regions.size() + kNoiseParams; }

  Eigen::VectorXd flatten() const;
  static ParamVector unflatten(const Eigen::VectorXd& flat);

  bool operator==(const ParamVector&) const = default;
};

inline Eigen::Index region_slot(std::size_t region, int slot) {
  return static_cast<Eigen::Index>(kParamsPerRegion * region + slot);
}
inline Eigen::Index noise_slot(std::size_t n_regions, int slot) {
  return static_cast<Eigen::Index>(kParamsPerRegion * n_regions + slot);
}

/// Region count implied by a flattened dimension 4R + 4.
std::size_t regions_for_dimension(Eigen::Index dimension);

/// Human-readable slot names ("t0[r]", "N[r]", ..., "tau_phi", ...), using region ids.
std::vector<std::string> parameter_names(const std::vector<std::string>& region_ids);

}  // namespace epifield
