#include "slicesim/metrics.hpp"

#include <cstdio>

namespace slicesim {

double qos_satisfaction_rate(const std::vector<QoSRecord>& window) {
  if (window.empty()) throw InputError("qos_satisfaction_rate: empty window");
  long satisfied = 0;
  for (const auto& rec : window) satisfied += rec.satisfied() ? 1 : 0;
  return static_cast<double>(satisfied) / window.size();
}

double overall_utilization(double radio_pct, double bandwidth_pct, double compute_pct) {
  return (radio_pct + bandwidth_pct + compute_pct) / 3.0;
}

std::vector<UtilizationRow> utilization_report(const std::vector<Eigen::Vector3d>& usage,
                                               const Eigen::Vector3d& capacity, int buckets) {
  if (usage.empty()) throw InputError("utilization_report: empty usage series");
  if (buckets < 1) throw ConfigError("utilization_report: buckets must be >= 1");
  for (int d = 0; d < 3; ++d) {
    if (!(capacity[d] > 0)) throw ConfigError("utilization_report: zero capacity domain");
  }

  const int T = static_cast<int>(usage.size());
  const int B = std::min(buckets, T);
  std::vector<UtilizationRow> rows;
  rows.reserve(B);
  for (int b = 0; b < B; ++b) {
    const int lo = b * T / B;
    const int hi = (b + 1) * T / B;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int t = lo; t < hi; ++t) mean += usage[t];
    mean /= std::max(1, hi - lo);

    UtilizationRow row;
    row.label = "T" + std::to_string(b + 1);
    row.radio_pct = 100.0 * mean[0] / capacity[0];
    row.bandwidth_pct = 100.0 * mean[1] / capacity[1];
    row.compute_pct = 100.0 * mean[2] / capacity[2];
    row.overall_pct = overall_utilization(row.radio_pct, row.bandwidth_pct, row.compute_pct);
    rows.push_back(row);
  }
  return rows;
}

std::string utilization_table(const std::vector<UtilizationRow>& rows) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-10s %18s %22s %21s %19s\n", "Time Slot",
                "Radio Utilization (%)", "Bandwidth Utilization (%)",
                "Computing Utilization (%)", "Overall Utilization (%)");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-10s %18.2f %22.2f %21.2f %19.2f\n", r.label.c_str(),
                  r.radio_pct, r.bandwidth_pct, r.compute_pct, r.overall_pct);
    out += line;
  }
  return out;
}

}  // namespace slicesim
