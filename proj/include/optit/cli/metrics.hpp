#pragma once
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace optit::cli {

struct MetricsRow {
  std::int64_t total_env_steps = 0;
  double windowed_return_mean = 0;
  double windowed_return_ci95 = 0;
  double loss_policy = 0;
  double loss_value = 0;
  double sigma_bar = 0;
};

// CSV schema: total_env_steps, windowed_return_mean, windowed_return_ci95,
// loss_policy, loss_value, sigma_bar. A leading comment line references the
// run manifest. Formatting is locale-independent so identical runs produce
// byte-identical files.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, const std::string& manifest_name);
  void add_row(const MetricsRow& row);

 private:
  std::ofstream os_;
};

struct MetricsFile {
  std::vector<MetricsRow> rows;
  std::string manifest;
};

MetricsFile read_metrics(const std::string& path);

std::string format_metrics_row(const MetricsRow& row);

}  // namespace optit::cli
