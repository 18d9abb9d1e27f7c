#include "epifield/params.hpp"

#include <stdexcept>
#include <string>

namespace epifield {

Eigen::VectorXd ParamVector::flatten() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dimension()));
  for (std::size_t r = 0; r < regions.size(); ++r) {
    out[region_slot(r, kSlotT0)] = regions[r].t0;
    out[region_slot(r, kSlotN)] = regions[r].n_total;
    out[region_slot(r, kSlotShape)] = regions[r].shape;
    out[region_slot(r, kSlotScale)] = regions[r].scale;
  }
  const std::size_t R = regions.size();
  out[noise_slot(R, kSlotTau)] = noise.tau;
  out[noise_slot(R, kSlotLambda)] = noise.lambda;
  out[noise_slot(R, kSlotSigmaA)] = noise.sigma_a;
  out[noise_slot(R, kSlotSigmaM)] = noise.sigma_m;
  return out;
}

ParamVector ParamVector::unflatten(const Eigen::VectorXd& flat) {
  const std::size_t R = regions_for_dimension(flat.size());
  ParamVector out;
  out.regions.resize(R);
  for (std::size_t r = 0; r < R; ++r) {
    out.regions[r] = {flat[region_slot(r, kSlotT0)], flat[region_slot(r, kSlotN)],
                      flat[region_slot(r, kSlotShape)], flat[region_slot(r, kSlotScale)]};
  }
  out.noise = {flat[noise_slot(R, kSlotTau)], flat[noise_slot(R, kSlotLambda)],
               flat[noise_slot(R, kSlotSigmaA)], flat[noise_slot(R, kSlotSigmaM)]};
  return out;
}

std::size_t regions_for_dimension(Eigen::Index dimension) {
  if (dimension < kParamsPerRegion + kNoiseParams || (dimension - kNoiseParams) % kParamsPerRegion != 0) {
    throw std::invalid_argument("parameter vector length must be 4R + 4 with R >= 1, got " +
                                std::to_string(dimension));
  }
  return static_cast<std::size_t>((dimension - kNoiseParams) / kParamsPerRegion);
}

std::vector<std::string> parameter_names(const std::vector<std::string>& region_ids) {
  std::vector<std::string> names;
  for (const auto& id : region_ids) {
    names.push_back("t0[" + id + "]");
    names.push_back("N[" + id + "]");
    names.push_back("k[" + id + "]");
    names.push_back("theta[" + id + "]");
  }
  names.insert(names.end(), {"tau_phi", "lambda_phi", "sigma_a", "sigma_m"});
  return names;
}

}  // namespace epifield
