#include <CLI11.hpp>
#include <cmath>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "epifield/case_data.hpp"
#include "epifield/config.hpp"
#include "epifield/errors.hpp"
#include "epifield/gradcheck.hpp"
#include "epifield/io.hpp"
#include "epifield/mcmc.hpp"
#include "epifield/pipeline.hpp"
#include "epifield/plot.hpp"
#include "epifield/predictive.hpp"
#include "epifield/surveillance.hpp"
#include "epifield/synthetic.hpp"
#include "epifield/vi.hpp"

namespace fs = std::filesystem;
using namespace epifield;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config;
  std::string out = "out";
  std::string fit;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool plot = false;
  bool raw = false;
  std::string regions;
};

std::string out_path(const Options& opt, const std::string& name) { return (fs::path(opt.out) / name).string(); }

RunConfig load(const Options& opt) {
  RunConfig config = load_config(opt.config);
  if (opt.seed_given) config.seed = opt.seed;
  if (!opt.regions.empty()) {
    config.region_subset.clear();
    std::stringstream list(opt.regions);
    std::string id;
    while (std::getline(list, id, ',')) {
      if (!id.empty()) config.region_subset.push_back(id);
    }
  }
  return config;
}

StoredFit load_fit(const Options& opt, const PipelineInputs& inputs) {
  const std::string path = opt.fit.empty() ? out_path(opt, "fit.json") : opt.fit;
  StoredFit fit = parse_fit_json(read_file(path));
  check_fit_matches(fit, inputs);
  return fit;
}

template <typename Writer>
void write_with(const std::string& path, Writer&& writer) {
  std::ostringstream buffer;
  writer(buffer);
  write_text(path, buffer.str());
}

/// Observation series for scoring and detection, with the configured raw/smoothed choice.
const CaseData& scored_series(const PipelineInputs& inputs, bool use_raw) { return use_raw ? inputs.raw : inputs.series; }

int cmd_fit(const Options& opt) {
  const PipelineInputs inputs = load_inputs(load(opt), opt.raw);
  const ModelContext context = fit_context(inputs);
  OptimizerConfig optimizer = inputs.config.optimizer;
  optimizer.seed = inputs.config.optimizer_seed();
  optimizer.threads = inputs.config.threads;
  const VariationalFit fit = fit_mfvi(context, optimizer, inputs.config.mle);
  write_with(out_path(opt, "trace.csv"), [&](std::ostream& o) { write_trace_csv(o, fit.trace); });
  write_text(out_path(opt, "fit.json"), fit_to_json(fit, inputs, "trace.csv"));
  if (opt.plot) write_text(out_path(opt, "trace.svg"), trace_svg(fit.trace));
  std::cout << "fit: " << fit.trace.size() << " iterations, final ELBO estimate "
            << (fit.trace.size() ? fit.trace.elbo.back() : 0.0) << ", MLE scaled gradient " << fit.mle.scaled_grad_norm
            << "\n";
  return kExitOk;
}

int cmd_forecast(const Options& opt) {
  const PipelineInputs inputs = load_inputs(load(opt), opt.raw);
  const ForecastEnsemble ensemble = forecast_from_fit(load_fit(opt, inputs), inputs);
  const auto dates = inputs.horizon_dates();
  write_with(out_path(opt, "forecast.csv"),
             [&](std::ostream& o) { write_forecast_csv(o, ensemble, dates, inputs.region_ids()); });
  if (opt.plot) {
    std::vector<std::string> names;
    for (const auto& r : inputs.graph.regions()) names.push_back(r.name.empty() ? r.id : r.name);
    write_text(out_path(opt, "fantail.svg"),
               fantail_svg(ensemble, observations_on(inputs.series, dates), dates, names, inputs.first_forecast_row()));
  }
  std::cout << "forecast: " << ensemble.draws() << " draws over " << dates.size() << " days\n";
  return kExitOk;
}

int cmd_detect(const Options& opt) {
  const PipelineInputs inputs = load_inputs(load(opt), opt.raw);
  const ForecastEnsemble ensemble = forecast_from_fit(load_fit(opt, inputs), inputs);
  const auto dates = inputs.horizon_dates();
  const Eigen::MatrixXd observed = observations_on(scored_series(inputs, inputs.config.detect_on_raw), dates);
  const SurveillanceConfig& s = inputs.config.surveillance;
  const DetectionResult result =
      detect(ensemble, observed, inputs.first_forecast_row(), DetectionOptions{s.boundary_level, s.run_length});
  write_with(out_path(opt, "alarms.csv"),
             [&](std::ostream& o) { write_alarms_csv(o, result, dates, inputs.region_ids()); });
  std::cout << "detect: " << result.outliers.size() << " outlier days, " << result.alarms.size() << " alarms\n";
  return kExitOk;
}

ExceedanceMap compute_exceedance(const PipelineInputs& inputs, const ForecastEnsemble& ensemble) {
  const auto dates = inputs.horizon_dates();
  const Eigen::MatrixXd observed = observations_on(scored_series(inputs, inputs.config.detect_on_raw), dates);
  const SurveillanceConfig& s = inputs.config.surveillance;
  const Eigen::Index start = inputs.first_forecast_row();
  const int window = std::min<int>(s.n_smooth, static_cast<int>(ensemble.day_count() - start));
  if (window < 1) throw DataError("exceedance needs forecast_days >= 1");
  return exceedance(ensemble, observed, start, window, s.boundary_level);
}

int cmd_exceedance(const Options& opt) {
  const PipelineInputs inputs = load_inputs(load(opt), opt.raw);
  const ForecastEnsemble ensemble = forecast_from_fit(load_fit(opt, inputs), inputs);
  const ExceedanceMap map = compute_exceedance(inputs, ensemble);
  write_with(out_path(opt, "exceedance.csv"),
             [&](std::ostream& o) { write_exceedance_csv(o, map, inputs.region_ids()); });
  std::cout << "exceedance: written for " << map.mean_exceedance.size() << " regions\n";
  return kExitOk;
}

int cmd_cluster(const Options& opt) {
  const PipelineInputs inputs = load_inputs(load(opt), opt.raw);
  const ForecastEnsemble ensemble = forecast_from_fit(load_fit(opt, inputs), inputs);
  const ExceedanceMap map = compute_exceedance(inputs, ensemble);
  const auto& regions = inputs.graph.regions();
  Eigen::MatrixXd features(static_cast<Eigen::Index>(regions.size()), 3);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const double gamma = map.mean_exceedance[i];
    features.row(i) << regions[r].lat, regions[r].lon, std::isfinite(gamma) ? gamma : 0.0;
  }
  const SurveillanceConfig& s = inputs.config.surveillance;
  const ClusterResult result =
      cluster_regions(features, s.cut, parse_cut_mode(s.cut_mode), parse_linkage(s.linkage));
  write_with(out_path(opt, "clusters.csv"),
             [&](std::ostream& o) { write_clusters_csv(o, result, inputs.region_ids()); });
  write_text(out_path(opt, "dendrogram.json"), dendrogram_json(result, inputs.region_ids()));
  std::cout << "cluster: " << result.cluster_count << " clusters at height " << result.cut_height << "\n";
  return kExitOk;
}

int cmd_crps(const Options& opt) {
  const PipelineInputs inputs = load_inputs(load(opt), opt.raw);
  const ForecastEnsemble ensemble = forecast_from_fit(load_fit(opt, inputs), inputs);
  const auto dates = inputs.horizon_dates();
  const Eigen::Index fit_rows = inputs.first_forecast_row();
  const Eigen::MatrixXd observed = observations_on(scored_series(inputs, inputs.config.crps_on_raw), dates);
  Eigen::MatrixXd scored = observed;
  scored.bottomRows(scored.rows() - fit_rows).setConstant(std::numeric_limits<double>::quiet_NaN());
  const CrpsResult score = crps(ensemble, scored);
  const Eigen::VectorXd totals = observations_on(inputs.series, dates).topRows(fit_rows).colwise().sum().transpose();
  const CrpsScaling scaling = crps_ratio_and_fit(score.per_region, totals);
  write_with(out_path(opt, "crps.csv"), [&](std::ostream& o) {
    write_crps_csv(o, inputs.region_ids(), score.per_region, totals, scaling.ratio);
  });
  nlohmann::json summary = {{"slope", scaling.slope},     {"intercept", scaling.intercept}, {"rho_q25", scaling.q25},
                            {"rho_q50", scaling.q50},     {"rho_q75", scaling.q75},
                            {"excluded_regions", scaling.excluded.size()}};
  write_text(out_path(opt, "crps_fit.json"), summary.dump(2) + "\n");
  std::cout << "crps: slope " << scaling.slope << ", intercept " << scaling.intercept << "\n";
  return kExitOk;
}

int cmd_mcmc(const Options& opt) {
  const PipelineInputs inputs = load_inputs(load(opt), opt.raw);
  const ModelContext context = fit_context(inputs);
  const std::string fit_path = opt.fit.empty() ? out_path(opt, "fit.json") : opt.fit;
  std::optional<StoredFit> stored;
  if (fs::exists(fit_path)) stored = load_fit(opt, inputs);
  const Eigen::VectorXd start =
      stored ? stored->mle_xhat : mle_fit(default_initial_guess(context), context, inputs.config.mle).xhat;
  AmcmcConfig config = inputs.config.mcmc;
  config.seed = inputs.config.mcmc_seed();
  if (stored && config.initial_proposal_scales.size() == 0) {
    config.initial_proposal_scales = stored->state.sigma() * (2.38 / std::sqrt(static_cast<double>(start.size())));
  }
  const PosteriorDensity target(context, true);
  const ChainState chain = run_amcmc(target, start, config);
  const auto names = parameter_names(inputs.region_ids());
  write_with(out_path(opt, "chain_summary.csv"), [&](std::ostream& o) {
    write_chain_summary_csv(o, summarize_chain(chain, names, inputs.config.transforms));
  });
  if (stored) {
    write_with(out_path(opt, "comparison.csv"), [&](std::ostream& o) {
      write_comparison_csv(o, compare_posteriors(chain, stored->state, names, inputs.config.transforms));
    });
  }
  std::cout << "mcmc: " << chain.samples.rows() << " kept draws, acceptance rate " << chain.acceptance_rate << "\n";
  return kExitOk;
}

int cmd_simulate(const Options& opt) {
  const RunConfig config = load(opt);
  if (!config.simulation) throw DataError("config has no simulation block");
  const SimulationConfig& sim = *config.simulation;
  if (sim.n_days < 1 || sim.start_date.empty()) throw DataError("simulation needs start_date and n_days >= 1");
  const RegionGraph graph = load_graph(config.resolve(config.data.regions), config.resolve(config.data.edges));
  ParamVector truth;
  truth.regions.resize(graph.size());
  std::vector<bool> seen(graph.size(), false);
  for (const RegionTruth& t : sim.regions) {
    const int idx = graph.index_of(t.region_id);
    if (idx < 0) throw DataError("simulation names unknown region " + t.region_id);
    truth.regions[idx] = t.params;
    seen[idx] = true;
  }
  for (std::size_t r = 0; r < seen.size(); ++r) {
    if (!seen[r]) throw DataError("simulation has no truth for region " + graph.region(r).id);
  }
  truth.noise = sim.noise;
  std::vector<ExtraWave> waves;
  for (const RegionTruth& w : sim.extra_waves) {
    const int idx = graph.index_of(w.region_id);
    if (idx < 0) throw DataError("extra wave names unknown region " + w.region_id);
    waves.push_back({static_cast<std::size_t>(idx), w.params});
  }
  const Date start = parse_date(sim.start_date);
  const Date reference = config.reference_date.empty() ? parse_date(config.fit_window.start) : parse_date(config.reference_date);
  CaseData data;
  data.region_ids = graph.ids();
  std::vector<double> days;
  for (int i = 0; i < sim.n_days; ++i) {
    data.dates.push_back(start + std::chrono::days{i});
    days.push_back(day_offset(data.dates.back(), reference));
  }
  const ConvolutionModel model(config.incubation, config.quadrature);
  const SyntheticData synthetic =
      generate_synthetic(truth, graph, model, days, config.simulation_seed(), waves, sim.floor_at_zero);
  data.counts = synthetic.observed;
  write_with(out_path(opt, "cases.csv"), [&](std::ostream& o) { write_cases(o, data); });

  nlohmann::json truth_json;
  truth_json["reference_date"] = format_date(reference);
  truth_json["region_ids"] = data.region_ids;
  truth_json["parameter_names"] = parameter_names(data.region_ids);
  const Eigen::VectorXd flat = truth.flatten();
  truth_json["params"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  nlohmann::json extra = nlohmann::json::array();
  for (const ExtraWave& w : waves) {
    extra.push_back({{"region_id", data.region_ids[w.region]},
                     {"t0", w.pulse.t0},
                     {"N", w.pulse.n_total},
                     {"k", w.pulse.shape},
                     {"theta", w.pulse.scale}});
  }
  truth_json["extra_waves"] = extra;
  write_text(out_path(opt, "truth.json"), truth_json.dump(2) + "\n");
  std::cout << "simulate: " << sim.n_days << " days for " << graph.size() << " regions\n";
  return kExitOk;
}

int cmd_gradcheck(const Options& opt) {
  constexpr double kLikTolerance = 1e-5;
  constexpr double kElboTolerance = 1e-4;
  const PipelineInputs inputs = load_inputs(load(opt), opt.raw);
  const ModelContext context = fit_context(inputs);
  const Eigen::VectorXd x = to_unconstrained(default_initial_guess(context), context.transforms);
  const GradcheckReport report = gradient_check(context, x, inputs.config.seed);
  std::cout << "gradcheck max relative error: log-likelihood " << report.log_likelihood << ", log-posterior "
            << report.posterior << ", ELBO " << report.elbo << "\n";
  const bool ok = report.log_likelihood < kLikTolerance && report.posterior < kLikTolerance &&
                  report.elbo < kElboTolerance;
  std::cout << (ok ? "gradcheck: PASS\n" : "gradcheck: FAIL\n");
  return ok ? kExitOk : kExitNumerical;
}

void write_diagnostics(const Options& opt, const std::string& message, const ElboTrace* trace) {
  try {
    std::string text = "error: " + message + "\n";
    write_text(out_path(opt, "diagnostics.txt"), text);
    if (trace != nullptr) {
      write_with(out_path(opt, "diverged_trace.csv"), [&](std::ostream& o) { write_trace_csv(o, *trace); });
    }
  } catch (...) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatially coupled epidemic calibration, forecasting and outbreak detection"};
  app.require_subcommand(1);
  Options opt;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const std::vector<Command> commands = {
      {"fit", "fit the variational posterior; writes fit.json and trace.csv", cmd_fit},
      {"forecast", "posterior-predictive bands; writes forecast.csv", cmd_forecast},
      {"detect", "outbreak alarms on forecast days; writes alarms.csv", cmd_detect},
      {"exceedance", "mean exceedance over the forecast window; writes exceedance.csv", cmd_exceedance},
      {"cluster", "hierarchical clustering of regions; writes clusters.csv and dendrogram.json", cmd_cluster},
      {"crps", "CRPS per region and its scaling fit; writes crps.csv", cmd_crps},
      {"mcmc", "adaptive Metropolis reference posterior; writes chain_summary.csv", cmd_mcmc},
      {"simulate", "synthetic case counts; writes cases.csv and truth.json", cmd_simulate},
      {"gradcheck", "compare analytic gradients with finite differences", cmd_gradcheck},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--fit", opt.fit, "fit.json to use (default OUT/fit.json)");
    sub->add_option("--seed", opt.seed, "override the configured seed");
    sub->add_flag("--plot", opt.plot, "also write SVG plots");
    sub->add_flag("--raw", opt.raw, "use raw counts instead of the smoothed series");
    sub->add_option("--regions", opt.regions, "comma-separated region ids to keep");
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }
  for (const auto& [sub, command] : subs) {
    if (!sub->parsed()) continue;
    opt.seed_given = sub->count("--seed") > 0;
    try {
      return command->run(opt);
    } catch (const DataError& e) {
      std::cerr << "data error: " << e.what() << "\n";
      return kExitData;
    } catch (const DivergenceError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      write_diagnostics(opt, e.what(), &e.trace());
      return kExitNumerical;
    } catch (const NumericalError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      write_diagnostics(opt, e.what(), nullptr);
      return kExitNumerical;
    } catch (const std::invalid_argument& e) {
      std::cerr << "invalid input: " << e.what() << "\n";
      return kExitData;
    } catch (const std::domain_error& e) {
      std::cerr << "invalid input: " << e.what() << "\n";
      return kExitData;
    }
  }
  return kExitUsage;
}
