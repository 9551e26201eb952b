#include "optit/cli/plot.hpp"

#include <algorithm>
#include <cmath>

#include "optit/util/require.hpp"
#include "optit/util/stats.hpp"
#include "optit/util/svg.hpp"

namespace optit::cli {

std::vector<CurvePoint> aggregate_series(const PlotSeries& s) {
  require(!s.files.empty(), "plot: series '" + s.label + "' has no files");
  const auto& grid = s.files[0].rows;
  for (const auto& f : s.files) {
    require(f.rows.size() == grid.size(), "plot: mismatched step grids in series " + s.label);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      require(f.rows[i].total_env_steps == grid[i].total_env_steps,
              "plot: mismatched step grids in series " + s.label);
    }
  }
  std::vector<CurvePoint> out;
  std::vector<double> vals;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    vals.clear();
    for (const auto& f : s.files) {
      double v = f.rows[i].windowed_return_mean;
      if (!std::isnan(v)) vals.push_back(v);
    }
    if (vals.empty()) continue;  // window not yet populated at this step
    MeanCi mc = mean_ci95(vals);
    out.push_back({grid[i].total_env_steps, mc.mean, mc.ci95, mc.n});
  }
  return out;
}

void plot_return_curves(const std::vector<PlotSeries>& series, const std::string& out_svg,
                        std::optional<double> y_floor) {
  require(!series.empty(), "plot: need at least one series");
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};

  std::vector<std::vector<CurvePoint>> curves;
  for (const auto& s : series) curves.push_back(aggregate_series(s));

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& c : curves) {
    for (const auto& p : c) {
      xmin = std::min(xmin, static_cast<double>(p.step));
      xmax = std::max(xmax, static_cast<double>(p.step));
      ymin = std::min(ymin, p.mean - p.ci95);
      ymax = std::max(ymax, p.mean + p.ci95);
    }
  }
  require(xmax >= xmin, "plot: no data points");
  if (y_floor) ymin = std::max(ymin, *y_floor);
  if (ymax <= ymin) ymax = ymin + 1.0;
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double W = 640, H = 420, ml = 70, mr = 20, mt = 24, mb = 48;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto X = [&](double x) { return ml + (x - xmin) / std::max(1.0, xmax - xmin) * pw; };
  auto Y = [&](double y) {
    double yy = std::max(y, ymin);
    return mt + (ymax - yy) / (ymax - ymin) * ph;
  };

  SvgWriter svg(W, H);
  svg.rect(ml, mt, pw, ph, "none", "#444", 1.0);
  for (int t = 0; t <= 5; ++t) {
    double xv = xmin + t * (xmax - xmin) / 5;
    svg.line(X(xv), mt + ph, X(xv), mt + ph + 4, "#444", 1.0);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.0f", xv);
    svg.text(X(xv), mt + ph + 18, buf, 10.0, "#222", "middle");
    double yv = ymin + t * (ymax - ymin) / 5;
    svg.line(ml - 4, Y(yv), ml, Y(yv), "#444", 1.0);
    std::snprintf(buf, sizeof buf, "%.3g", yv);
    svg.text(ml - 8, Y(yv) + 4, buf, 10.0, "#222", "end");
  }
  svg.text(ml + pw / 2, H - 12, "total env steps", 11.0, "#222", "middle");
  svg.text(14, mt + ph / 2, "windowed return", 11.0, "#222", "middle");

  for (std::size_t si = 0; si < curves.size(); ++si) {
    const std::string color = kColors[si % 6];
    std::string pts;
    for (const auto& p : curves[si]) {
      pts += SvgWriter::fmt(X(static_cast<double>(p.step))) + "," +
             SvgWriter::fmt(Y(p.mean)) + " ";
    }
    svg.polyline(pts, color, 1.6);
    // error bars on a thinned subset
    std::size_t stride = std::max<std::size_t>(1, curves[si].size() / 16);
    for (std::size_t i = 0; i < curves[si].size(); i += stride) {
      const auto& p = curves[si][i];
      if (p.seeds < 2) continue;
      double x = X(static_cast<double>(p.step));
      svg.line(x, Y(p.mean - p.ci95), x, Y(p.mean + p.ci95), color, 1.0);
      svg.line(x - 3, Y(p.mean - p.ci95), x + 3, Y(p.mean - p.ci95), color, 1.0);
      svg.line(x - 3, Y(p.mean + p.ci95), x + 3, Y(p.mean + p.ci95), color, 1.0);
    }
    svg.line(ml + 8, mt + 14 + 14 * si, ml + 30, mt + 14 + 14 * si, color, 2.0);
    svg.text(ml + 36, mt + 18 + 14 * si, series[si].label, 11.0);
  }
  svg.save(out_svg);
}

}  // namespace optit::cli
