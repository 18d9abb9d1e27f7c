#include "epifield/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace epifield {

namespace {

constexpr double kPanelWidth = 640.0;
constexpr double kPanelHeight = 260.0;
constexpr double kMargin = 48.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Axis {
  double lo;
  double hi;
  double pixel_lo;
  double pixel_hi;
  double operator()(double v) const {
    const double span = hi > lo ? hi - lo : 1.0;
    return pixel_lo + (v - lo) / span * (pixel_hi - pixel_lo);
  }
};

std::string polyline(const Eigen::VectorXd& ys, const Axis& x, const Axis& y) {
  std::ostringstream s;
  for (Eigen::Index i = 0; i < ys.size(); ++i) {
    if (!std::isfinite(ys[i])) continue;
    s << num(x(static_cast<double>(i))) << ',' << num(y(ys[i])) << ' ';
  }
  return s.str();
}

std::string band(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, const Axis& x, const Axis& y) {
  std::ostringstream s;
  for (Eigen::Index i = 0; i < hi.size(); ++i) s << num(x(static_cast<double>(i))) << ',' << num(y(hi[i])) << ' ';
  for (Eigen::Index i = lo.size() - 1; i >= 0; --i) s << num(x(static_cast<double>(i))) << ',' << num(y(lo[i])) << ' ';
  return s.str();
}

}  // namespace

std::string fantail_svg(const ForecastEnsemble& ensemble, const Eigen::MatrixXd& observed,
                        const std::vector<Date>& dates, const std::vector<std::string>& region_names,
                        Eigen::Index first_forecast_row) {
  const Eigen::Index regions = ensemble.region_count();
  const Eigen::Index days = ensemble.day_count();
  const double height = static_cast<double>(regions) * kPanelHeight;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPanelWidth << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (Eigen::Index r = 0; r < regions; ++r) {
    const double top = static_cast<double>(r) * kPanelHeight;
    double y_max = ensemble.p95.col(r).maxCoeff();
    double y_min = std::min(0.0, ensemble.p05.col(r).minCoeff());
    for (Eigen::Index i = 0; i < observed.rows(); ++i) {
      if (std::isfinite(observed(i, r))) y_max = std::max(y_max, observed(i, r));
    }
    const Axis x{0.0, static_cast<double>(std::max<Eigen::Index>(days - 1, 1)), kMargin, kPanelWidth - 12.0};
    const Axis y{y_min, y_max * 1.05 + 1e-9, top + kPanelHeight - 28.0, top + 20.0};

    svg << "<g>\n<text x=\"" << kMargin << "\" y=\"" << num(top + 14.0) << "\">" << region_names[r] << "</text>\n";
    svg << "<line x1=\"" << kMargin << "\" y1=\"" << num(y(y_min)) << "\" x2=\"" << kPanelWidth - 12.0 << "\" y2=\""
        << num(y(y_min)) << "\" stroke=\"#444\"/>\n";
    svg << "<line x1=\"" << kMargin << "\" y1=\"" << num(y.pixel_hi) << "\" x2=\"" << kMargin << "\" y2=\""
        << num(y.pixel_lo) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"4\" y=\"" << num(y.pixel_hi + 4.0) << "\">" << num(y_max * 1.05) << "</text>\n";
    svg << "<text x=\"4\" y=\"" << num(y.pixel_lo) << "\">" << num(y_min) << "</text>\n";
    if (!dates.empty()) {
      svg << "<text x=\"" << kMargin << "\" y=\"" << num(top + kPanelHeight - 12.0) << "\">" << format_date(dates.front())
          << "</text>\n<text x=\"" << kPanelWidth - 80.0 << "\" y=\"" << num(top + kPanelHeight - 12.0) << "\">"
          << format_date(dates.back()) << "</text>\n";
    }
    svg << "<polygon points=\"" << band(ensemble.p25.col(r), ensemble.p75.col(r), x, y)
        << "\" fill=\"#6baed6\" fill-opacity=\"0.45\" stroke=\"none\"/>\n";
    svg << "<polyline points=\"" << polyline(ensemble.p05.col(r), x, y)
        << "\" fill=\"none\" stroke=\"#2171b5\" stroke-dasharray=\"4 3\"/>\n";
    svg << "<polyline points=\"" << polyline(ensemble.p95.col(r), x, y)
        << "\" fill=\"none\" stroke=\"#2171b5\" stroke-dasharray=\"4 3\"/>\n";
    svg << "<polyline points=\"" << polyline(ensemble.p50.col(r), x, y)
        << "\" fill=\"none\" stroke=\"#08306b\" stroke-width=\"1.5\"/>\n";
    if (first_forecast_row > 0 && first_forecast_row < days) {
      const double fx = x(static_cast<double>(first_forecast_row) - 0.5);
      svg << "<line x1=\"" << num(fx) << "\" y1=\"" << num(y.pixel_hi) << "\" x2=\"" << num(fx) << "\" y2=\""
          << num(y.pixel_lo) << "\" stroke=\"#999\" stroke-dasharray=\"2 2\"/>\n";
    }
    for (Eigen::Index i = 0; i < std::min(observed.rows(), days); ++i) {
      if (!std::isfinite(observed(i, r))) continue;
      svg << "<circle cx=\"" << num(x(static_cast<double>(i))) << "\" cy=\"" << num(y(observed(i, r)))
          << "\" r=\"1.8\" fill=\"#d94801\"/>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string trace_svg(const ElboTrace& trace) {
  std::ostringstream svg;
  const double height = 2.0 * kPanelHeight;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPanelWidth << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const auto n = static_cast<Eigen::Index>(trace.size());
  if (n == 0) {
    svg << "</svg>\n";
    return svg.str();
  }
  Eigen::VectorXd elbo(n);
  Eigen::VectorXd log_norm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    elbo[i] = trace.elbo[i];
    log_norm[i] = trace.grad_norm[i] > 0.0 ? std::log10(trace.grad_norm[i]) : NAN;
  }
  // Objective axis spans the later 90% of iterations.
  std::vector<double> tail;
  for (Eigen::Index i = n / 10; i < n; ++i) {
    if (std::isfinite(elbo[i])) tail.push_back(elbo[i]);
  }
  const double lo = tail.empty() ? 0.0 : *std::min_element(tail.begin(), tail.end());
  const double hi = tail.empty() ? 1.0 : *std::max_element(tail.begin(), tail.end());
  const Axis x{0.0, static_cast<double>(std::max<Eigen::Index>(n - 1, 1)), kMargin, kPanelWidth - 12.0};
  const Axis y1{lo, hi > lo ? hi : lo + 1.0, kPanelHeight - 28.0, 20.0};
  Eigen::VectorXd clipped = elbo.cwiseMin(y1.hi).cwiseMax(y1.lo);

  double nlo = INFINITY;
  double nhi = -INFINITY;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(log_norm[i])) {
      nlo = std::min(nlo, log_norm[i]);
      nhi = std::max(nhi, log_norm[i]);
    }
  }
  if (!std::isfinite(nlo)) nlo = nhi = 0.0;
  const Axis y2{nlo, nhi > nlo ? nhi : nlo + 1.0, height - 28.0, kPanelHeight + 20.0};

  svg << "<text x=\"" << kMargin << "\" y=\"14\">negative ELBO estimate</text>\n";
  svg << "<text x=\"4\" y=\"24\">" << num(y1.hi) << "</text><text x=\"4\" y=\"" << num(kPanelHeight - 28.0) << "\">"
      << num(y1.lo) << "</text>\n";
  svg << "<polyline points=\"" << polyline(clipped, x, y1) << "\" fill=\"none\" stroke=\"#08306b\"/>\n";
  svg << "<text x=\"" << kMargin << "\" y=\"" << num(kPanelHeight + 14.0) << "\">log10 gradient norm</text>\n";
  svg << "<text x=\"4\" y=\"" << num(kPanelHeight + 24.0) << "\">" << num(y2.hi) << "</text><text x=\"4\" y=\""
      << num(height - 28.0) << "\">" << num(y2.lo) << "</text>\n";
  svg << "<polyline points=\"" << polyline(log_norm, x, y2) << "\" fill=\"none\" stroke=\"#d94801\"/>\n";
  svg << "<text x=\"" << kMargin << "\" y=\"" << num(height - 8.0) << "\">iteration 0 .. " << n - 1 << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace epifield
