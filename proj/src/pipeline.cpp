#include "epifield/pipeline.hpp"

#include <json.hpp>
#include <limits>

#include "epifield/errors.hpp"
#include "epifield/io.hpp"

namespace epifield {

using nlohmann::json;

std::vector<Date> PipelineInputs::horizon_dates() const {
  std::vector<Date> dates;
  for (Date d = fit_start; d <= fit_end + std::chrono::days{config.forecast_days}; d += std::chrono::days{1}) {
    dates.push_back(d);
  }
  return dates;
}

std::vector<double> PipelineInputs::horizon_days() const {
  std::vector<double> days;
  for (Date d : horizon_dates()) days.push_back(day_offset(d, reference));
  return days;
}

Eigen::Index PipelineInputs::first_forecast_row() const { return (fit_end - fit_start).count() + 1; }

std::string input_hash(const RunConfig& config, bool raw_mode) {
  RunConfig canonical = config;
  canonical.seed = 0;
  canonical.threads = 0;
  std::string bytes = config_to_json(canonical, -1);
  bytes += raw_mode ? "\nraw\n" : "\nsmoothed\n";
  for (const auto& path : {config.data.cases, config.data.regions, config.data.edges}) {
    if (path.empty()) continue;
    const std::string content = read_file(config.resolve(path));
    bytes += std::to_string(content.size()) + ":" + content;
  }
  return sha256_hex(bytes);
}

PipelineInputs load_inputs(const RunConfig& config, bool raw_mode) {
  config.validate();
  if (config.data.cases.empty() || config.data.regions.empty()) {
    throw DataError("config: data.cases and data.regions are required");
  }
  PipelineInputs in;
  in.config = config;
  in.raw_mode = raw_mode;
  RegionGraph full = load_graph(config.resolve(config.data.regions), config.resolve(config.data.edges));
  CaseData cases = ingest_cases(config.resolve(config.data.cases), full);

  if (!config.region_subset.empty()) {
    std::vector<std::size_t> keep;
    for (const auto& id : config.region_subset) {
      const int idx = full.index_of(id);
      if (idx < 0) throw DataError("region subset names unknown region " + id);
      keep.push_back(static_cast<std::size_t>(idx));
    }
    full = full.subset(keep);
    cases = cases.select_regions(keep);
  }
  in.graph = std::move(full);
  in.raw = cases;
  in.series = raw_mode ? cases : smooth(cases, config.smoothing_window);

  in.fit_start = parse_date(config.fit_window.start);
  in.fit_end = parse_date(config.fit_window.end);
  in.reference = config.reference_date.empty() ? in.fit_start : parse_date(config.reference_date);
  if (in.series.row_of(in.fit_start) < 0 || in.series.row_of(in.fit_end) < 0) {
    throw DataError("fit window " + config.fit_window.start + " .. " + config.fit_window.end +
                    " is not covered by the case file");
  }
  in.input_hash = input_hash(config, raw_mode);
  return in;
}

ModelContext fit_context(const PipelineInputs& in) {
  const Eigen::Index first = in.series.row_of(in.fit_start);
  const Eigen::Index count = in.series.row_of(in.fit_end) - first + 1;
  const CaseData window = in.series.slice(first, count);
  const double shift = day_offset(in.fit_start, in.reference);
  PriorSpec prior = in.config.prior;
  prior.t0_mean += shift;
  for (double& m : prior.t0_means) m += shift;
  return ModelContext{window.counts, window.day_offsets(in.reference), in.graph,
                      ConvolutionModel(in.config.incubation, in.config.quadrature), prior, in.config.transforms};
}

Eigen::MatrixXd observations_on(const CaseData& data, const std::vector<Date>& dates) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(dates.size()), data.counts.cols(),
                                                  std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < dates.size(); ++i) {
    const Eigen::Index row = data.row_of(dates[i]);
    if (row >= 0) out.row(static_cast<Eigen::Index>(i)) = data.counts.row(row);
  }
  return out;
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string fit_to_json(const VariationalFit& fit, const PipelineInputs& inputs, const std::string& trace_file) {
  const auto ids = inputs.region_ids();
  const auto names = parameter_names(ids);
  const TransformOptions& transforms = inputs.config.transforms;
  json j;
  j["input_hash"] = inputs.input_hash;
  j["region_ids"] = ids;
  j["parameter_names"] = names;
  j["reference_date"] = format_date(inputs.reference);
  j["variational"] = {{"mu", to_vector(fit.state.mu)},
                      {"rho", to_vector(fit.state.rho)},
                      {"sigma", to_vector(fit.state.sigma())}};
  j["posterior_median"] = to_vector(from_unconstrained(fit.state.mu, transforms).flatten());
  j["mle"] = {{"xhat", to_vector(fit.mle.xhat)},
              {"params", to_vector(fit.mle.params.flatten())},
              {"objective", fit.mle.objective},
              {"scaled_grad_norm", fit.mle.scaled_grad_norm},
              {"converged", fit.mle.converged}};
  j["final_elbo"] = fit.trace.size() > 0 ? fit.trace.elbo.back() : 0.0;
  j["iterations"] = fit.trace.size();
  j["trace_csv"] = trace_file;
  return j.dump(2) + "\n";
}

StoredFit parse_fit_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    StoredFit fit;
    fit.input_hash = j.at("input_hash").get<std::string>();
    fit.region_ids = j.at("region_ids").get<std::vector<std::string>>();
    fit.state.mu = from_vector(j.at("variational").at("mu").get<std::vector<double>>());
    fit.state.rho = from_vector(j.at("variational").at("rho").get<std::vector<double>>());
    fit.mle_xhat = from_vector(j.at("mle").at("xhat").get<std::vector<double>>());
    if (fit.state.mu.size() != fit.state.rho.size() ||
        fit.state.mu.size() != static_cast<Eigen::Index>(4 * fit.region_ids.size() + 4)) {
      throw DataError("fit.json: variational state does not match its region list");
    }
    return fit;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid fit.json: ") + e.what());
  }
}

void check_fit_matches(const StoredFit& fit, const PipelineInputs& inputs) {
  if (fit.input_hash != inputs.input_hash) {
    throw DataError("fit.json was produced from a different config or data set (hash " + fit.input_hash.substr(0, 12) +
                    " vs " + inputs.input_hash.substr(0, 12) + ")");
  }
  if (fit.region_ids != inputs.region_ids()) throw DataError("fit.json regions do not match the inputs");
}

ForecastEnsemble forecast_from_fit(const StoredFit& fit, const PipelineInputs& inputs) {
  const ModelContext context = fit_context(inputs);
  return sample_ppt(sampler_from_state(fit.state, inputs.config.transforms), context.model, inputs.graph,
                    inputs.horizon_days(), inputs.config.predictive.draws, inputs.config.predictive_seed(),
                    inputs.config.threads);
}

}  // namespace epifield
