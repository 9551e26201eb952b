#pragma once
#include <optional>
#include <string>
#include <vector>

#include "optit/cli/metrics.hpp"

namespace optit::cli {

struct PlotSeries {
  std::string label;
  std::vector<MetricsFile> files;  // one per seed; step grids must match
};

// Windowed-return curves with across-seed mean and 95% CI error bars
// (mean +- 1.96*sd/sqrt(n_seeds)). Mismatched step grids are rejected.
// `y_floor` thresholds the y axis from below.
void plot_return_curves(const std::vector<PlotSeries>& series, const std::string& out_svg,
                        std::optional<double> y_floor = std::nullopt);

// Across-seed stats for one step index of one series; exposed for tests.
struct CurvePoint {
  std::int64_t step = 0;
  double mean = 0;
  double ci95 = 0;
  int seeds = 0;
};
std::vector<CurvePoint> aggregate_series(const PlotSeries& s);

}  // namespace optit::cli
