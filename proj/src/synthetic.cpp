#include "epifield/synthetic.hpp"

#include <random>
#include <stdexcept>

#include "epifield/likelihood.hpp"
#include "epifield/random.hpp"

namespace epifield {

Eigen::MatrixXd synthetic_expected(const ParamVector& truth, const ConvolutionModel& model,
                                   const std::vector<double>& days, const std::vector<ExtraWave>& extra_waves) {
  Eigen::MatrixXd expected = predict_field(model, truth, days, false).counts;
  for (const ExtraWave& wave : extra_waves) {
    if (wave.region >= truth.region_count()) throw std::invalid_argument("extra wave refers to an unknown region");
    expected.col(static_cast<Eigen::Index>(wave.region)) += model.predict(wave.pulse, days);
  }
  return expected;
}

SyntheticData generate_synthetic(const ParamVector& truth, const RegionGraph& graph, const ConvolutionModel& model,
                                 const std::vector<double>& days, std::uint64_t seed,
                                 const std::vector<ExtraWave>& extra_waves, bool floor_at_zero) {
  if (truth.region_count() != graph.size()) throw std::invalid_argument("truth and graph region counts differ");
  SyntheticData out;
  out.truth = truth;
  out.extra_waves = extra_waves;
  out.expected = synthetic_expected(truth, model, days, extra_waves);
  out.observed = out.expected;

  const GmrfTerm gmrf = GmrfTerm::build(graph, truth.noise.lambda);
  auto engine = make_engine(seed, 0x5e, 0);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(out.expected.cols());
  for (Eigen::Index i = 0; i < out.expected.rows(); ++i) {
    const Eigen::VectorXd y = out.expected.row(i).transpose();
    const Eigen::MatrixXd root = covariance_root(noise_covariance(gmrf, truth.noise, y));
    for (Eigen::Index r = 0; r < z.size(); ++r) z[r] = normal(engine);
    out.observed.row(i) = (y + root * z).transpose();
  }
  if (floor_at_zero) out.observed = out.observed.cwiseMax(0.0);
  return out;
}

}  // namespace epifield
