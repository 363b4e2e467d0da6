#pragma once

#include <string>
#include <vector>

#include "slicesim/types.hpp"

namespace slicesim {

// Fraction of (user, step) records with no violation flags set.
double qos_satisfaction_rate(const std::vector<QoSRecord>& window);

struct UtilizationRow {
  std::string label;
  double radio_pct = 0, bandwidth_pct = 0, compute_pct = 0, overall_pct = 0;
};

// Overall column rule: the arithmetic mean of the three domain percentages.
double overall_utilization(double radio_pct, double bandwidth_pct, double compute_pct);

// Buckets a per-step usage series into `buckets` time slots (T1, T2, ...)
// and reports per-domain and overall utilization percentages.
std::vector<UtilizationRow> utilization_report(const std::vector<Eigen::Vector3d>& usage,
                                               const Eigen::Vector3d& capacity, int buckets);

std::string utilization_table(const std::vector<UtilizationRow>& rows);

}  // namespace slicesim
