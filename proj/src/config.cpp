#include "epifield/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "epifield/case_data.hpp"
#include "epifield/errors.hpp"

namespace epifield {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

RegionParams region_params_from(const json& j) {
  RegionParams p;
  read(j, "t0", p.t0);
  read(j, "N", p.n_total);
  read(j, "k", p.shape);
  read(j, "theta", p.scale);
  return p;
}

json region_params_to(const RegionParams& p) {
  return {{"t0", p.t0}, {"N", p.n_total}, {"k", p.shape}, {"theta", p.scale}};
}

NoiseParams noise_from(const json& j) {
  NoiseParams n;
  read(j, "tau_phi", n.tau);
  read(j, "lambda_phi", n.lambda);
  read(j, "sigma_a", n.sigma_a);
  read(j, "sigma_m", n.sigma_m);
  return n;
}

json noise_to(const NoiseParams& n) {
  return {{"tau_phi", n.tau}, {"lambda_phi", n.lambda}, {"sigma_a", n.sigma_a}, {"sigma_m", n.sigma_m}};
}

std::vector<RegionTruth> truths_from(const json& j) {
  std::vector<RegionTruth> out;
  for (const auto& item : j) out.push_back({item.at("region_id").get<std::string>(), region_params_from(item)});
  return out;
}

json truths_to(const std::vector<RegionTruth>& truths) {
  json arr = json::array();
  for (const auto& t : truths) {
    json item = region_params_to(t.params);
    item["region_id"] = t.region_id;
    arr.push_back(item);
  }
  return arr;
}

}  // namespace

std::string RunConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() ? p.string() : (base_dir / p).lexically_normal().string();
}

void RunConfig::validate() const {
  if (fit_window.start.empty() || fit_window.end.empty()) throw DataError("config: fit_window.start and end are required");
  if (!(parse_date(fit_window.start) < parse_date(fit_window.end))) {
    throw DataError("config: fit_window.start must precede fit_window.end");
  }
  if (!reference_date.empty()) parse_date(reference_date);
  if (forecast_days < 0) throw DataError("config: forecast_days must be >= 0");
  if (smoothing_window < 1 || smoothing_window % 2 == 0) throw DataError("config: smoothing_window must be odd");
  if (!(incubation.sigma > 0.0)) throw DataError("config: incubation.sigma must be positive");
  if (!(prior.t0_sd > 0.0)) throw DataError("config: prior.t0_sd must be positive");
  if (quadrature.nodes_per_panel < 2) throw DataError("config: quadrature.nodes_per_panel must be >= 2");
  if (predictive.draws < 2) throw DataError("config: predictive.draws must be >= 2");
  if (!(surveillance.boundary_level > 0.0 && surveillance.boundary_level < 1.0)) {
    throw DataError("config: surveillance.boundary_level must lie in (0, 1)");
  }
  if (surveillance.run_length < 1 || surveillance.n_smooth < 1) throw DataError("config: surveillance counts must be >= 1");
  if (surveillance.linkage != "complete" && surveillance.linkage != "single" && surveillance.linkage != "average") {
    throw DataError("config: unknown linkage " + surveillance.linkage);
  }
  if (surveillance.cut_mode != "fraction" && surveillance.cut_mode != "quantile") {
    throw DataError("config: unknown cut_mode " + surveillance.cut_mode);
  }
  try {
    optimizer.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: optimizer: ") + e.what());
  }
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    const json j = json::parse(text);
    read(j, "reference_date", c.reference_date);
    if (j.contains("fit_window")) {
      read(j["fit_window"], "start", c.fit_window.start);
      read(j["fit_window"], "end", c.fit_window.end);
    }
    read(j, "forecast_days", c.forecast_days);
    read(j, "smoothing_window", c.smoothing_window);
    if (j.contains("quadrature")) {
      read(j["quadrature"], "nodes_per_panel", c.quadrature.nodes_per_panel);
      read(j["quadrature"], "lag_breakpoints", c.quadrature.lag_breakpoints);
    }
    if (j.contains("incubation")) {
      read(j["incubation"], "mu", c.incubation.mu);
      read(j["incubation"], "sigma", c.incubation.sigma);
    }
    if (j.contains("prior")) {
      read(j["prior"], "t0_mean", c.prior.t0_mean);
      read(j["prior"], "t0_sd", c.prior.t0_sd);
      read(j["prior"], "t0_means", c.prior.t0_means);
      read(j["prior"], "t0_sds", c.prior.t0_sds);
    }
    if (j.contains("transforms")) {
      read(j["transforms"], "eps_theta", c.transforms.eps_theta);
      read(j["transforms"], "eps_lambda", c.transforms.eps_lambda);
    }
    if (j.contains("optimizer")) {
      const json& o = j["optimizer"];
      read(o, "step_size", c.optimizer.step_size);
      read(o, "beta1", c.optimizer.beta1);
      read(o, "beta2", c.optimizer.beta2);
      read(o, "eps_adam", c.optimizer.eps_adam);
      read(o, "max_iters", c.optimizer.max_iters);
      read(o, "n_samples", c.optimizer.n_samples);
      read(o, "grad_tolerance", c.optimizer.grad_tolerance);
      read(o, "tolerance_window", c.optimizer.tolerance_window);
      read(o, "initial_scale", c.optimizer.initial_scale);
      read(o, "include_jacobian_entropy", c.optimizer.include_jacobian_entropy);
    }
    if (j.contains("mle")) {
      read(j["mle"], "adam_iters", c.mle.adam_iters);
      read(j["mle"], "adam_step", c.mle.adam_step);
      read(j["mle"], "lbfgs_iters", c.mle.lbfgs_iters);
      read(j["mle"], "tolerance", c.mle.tolerance);
    }
    if (j.contains("mcmc")) {
      const json& m = j["mcmc"];
      read(m, "n_total", c.mcmc.n_total);
      read(m, "burn_in", c.mcmc.burn_in);
      read(m, "thin", c.mcmc.thin);
      read(m, "adapt_start", c.mcmc.adapt_start);
      read(m, "scale", c.mcmc.scale);
      read(m, "regularization", c.mcmc.regularization);
      read(m, "initial_proposal_sd", c.mcmc.initial_proposal_sd);
    }
    if (j.contains("predictive")) read(j["predictive"], "draws", c.predictive.draws);
    if (j.contains("surveillance")) {
      const json& s = j["surveillance"];
      read(s, "boundary_level", c.surveillance.boundary_level);
      read(s, "run_length", c.surveillance.run_length);
      read(s, "n_smooth", c.surveillance.n_smooth);
      read(s, "linkage", c.surveillance.linkage);
      read(s, "cut_mode", c.surveillance.cut_mode);
      read(s, "cut", c.surveillance.cut);
    }
    read(j, "crps_on_raw", c.crps_on_raw);
    read(j, "detect_on_raw", c.detect_on_raw);
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    if (j.contains("data")) {
      read(j["data"], "cases", c.data.cases);
      read(j["data"], "regions", c.data.regions);
      read(j["data"], "edges", c.data.edges);
    }
    read(j, "region_subset", c.region_subset);
    if (j.contains("simulation") && !j["simulation"].is_null()) {
      const json& s = j["simulation"];
      SimulationConfig sim;
      read(s, "start_date", sim.start_date);
      read(s, "n_days", sim.n_days);
      if (s.contains("regions")) sim.regions = truths_from(s["regions"]);
      if (s.contains("noise")) sim.noise = noise_from(s["noise"]);
      if (s.contains("extra_waves")) sim.extra_waves = truths_from(s["extra_waves"]);
      read(s, "floor_at_zero", sim.floor_at_zero);
      c.simulation = sim;
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::string config_to_json(const RunConfig& c, int indent) {
  json j;
  j["reference_date"] = c.reference_date;
  j["fit_window"] = {{"start", c.fit_window.start}, {"end", c.fit_window.end}};
  j["forecast_days"] = c.forecast_days;
  j["smoothing_window"] = c.smoothing_window;
  j["quadrature"] = {{"nodes_per_panel", c.quadrature.nodes_per_panel},
                     {"lag_breakpoints", c.quadrature.lag_breakpoints}};
  j["incubation"] = {{"mu", c.incubation.mu}, {"sigma", c.incubation.sigma}};
  j["prior"] = {{"t0_mean", c.prior.t0_mean},
                {"t0_sd", c.prior.t0_sd},
                {"t0_means", c.prior.t0_means},
                {"t0_sds", c.prior.t0_sds}};
  j["transforms"] = {{"eps_theta", c.transforms.eps_theta}, {"eps_lambda", c.transforms.eps_lambda}};
  j["optimizer"] = {{"step_size", c.optimizer.step_size},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps_adam", c.optimizer.eps_adam},
                    {"max_iters", c.optimizer.max_iters},
                    {"n_samples", c.optimizer.n_samples},
                    {"grad_tolerance", c.optimizer.grad_tolerance},
                    {"tolerance_window", c.optimizer.tolerance_window},
                    {"initial_scale", c.optimizer.initial_scale},
                    {"include_jacobian_entropy", c.optimizer.include_jacobian_entropy}};
  j["mle"] = {{"adam_iters", c.mle.adam_iters},
              {"adam_step", c.mle.adam_step},
              {"lbfgs_iters", c.mle.lbfgs_iters},
              {"tolerance", c.mle.tolerance}};
  j["mcmc"] = {{"n_total", c.mcmc.n_total},
               {"burn_in", c.mcmc.burn_in},
               {"thin", c.mcmc.thin},
               {"adapt_start", c.mcmc.adapt_start},
               {"scale", c.mcmc.scale},
               {"regularization", c.mcmc.regularization},
               {"initial_proposal_sd", c.mcmc.initial_proposal_sd}};
  j["predictive"] = {{"draws", c.predictive.draws}};
  j["surveillance"] = {{"boundary_level", c.surveillance.boundary_level},
                       {"run_length", c.surveillance.run_length},
                       {"n_smooth", c.surveillance.n_smooth},
                       {"linkage", c.surveillance.linkage},
                       {"cut_mode", c.surveillance.cut_mode},
                       {"cut", c.surveillance.cut}};
  j["crps_on_raw"] = c.crps_on_raw;
  j["detect_on_raw"] = c.detect_on_raw;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["data"] = {{"cases", c.data.cases}, {"regions", c.data.regions}, {"edges", c.data.edges}};
  j["region_subset"] = c.region_subset;
  if (c.simulation) {
    const SimulationConfig& s = *c.simulation;
    j["simulation"] = {{"start_date", s.start_date},
                       {"n_days", s.n_days},
                       {"regions", truths_to(s.regions)},
                       {"noise", noise_to(s.noise)},
                       {"extra_waves", truths_to(s.extra_waves)},
                       {"floor_at_zero", s.floor_at_zero}};
  } else {
    j["simulation"] = nullptr;
  }
  return j.dump(indent);
}

}  // namespace epifield
