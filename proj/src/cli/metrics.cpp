#include "optit/cli/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "optit/util/require.hpp"

namespace optit::cli {

namespace {
constexpr char kHeader[] =
    "total_env_steps,windowed_return_mean,windowed_return_ci95,loss_policy,loss_value,sigma_bar";
}

std::string format_metrics_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g,%.9g",
                static_cast<long long>(r.total_env_steps), r.windowed_return_mean,
                r.windowed_return_ci95, r.loss_policy, r.loss_value, r.sigma_bar);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path, const std::string& manifest_name)
    : os_(path) {
  require(os_.good(), "MetricsWriter: cannot open " + path);
  os_ << "# manifest: " << manifest_name << "\n" << kHeader << "\n";
  os_.flush();
}

void MetricsWriter::add_row(const MetricsRow& row) {
  os_ << format_metrics_row(row) << "\n";
  os_.flush();
}

MetricsFile read_metrics(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "read_metrics: cannot open " + path);
  MetricsFile out;
  std::string line;
  bool saw_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# manifest:", 0) == 0) {
      out.manifest = line.substr(std::string("# manifest:").size());
      if (!out.manifest.empty() && out.manifest.front() == ' ') out.manifest.erase(0, 1);
      continue;
    }
    if (line.front() == '#') continue;
    if (!saw_header) {
      require(line == kHeader, "read_metrics: unexpected header in " + path);
      saw_header = true;
      continue;
    }
    MetricsRow r;
    long long steps = 0;
    int got = std::sscanf(line.c_str(), "%lld,%lg,%lg,%lg,%lg,%lg", &steps,
                          &r.windowed_return_mean, &r.windowed_return_ci95, &r.loss_policy,
                          &r.loss_value, &r.sigma_bar);
    require(got == 6, "read_metrics: malformed row in " + path);
    r.total_env_steps = steps;
    out.rows.push_back(r);
  }
  require(saw_header, "read_metrics: missing header in " + path);
  return out;
}

}  // namespace optit::cli
