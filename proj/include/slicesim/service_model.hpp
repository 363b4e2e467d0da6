#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "slicesim/types.hpp"

// Closed-form service and fairness models. Everything here is a pure free
// function over scalars or Eigen expressions.
//
// The end-to-end service rate of a user is the three-way bottleneck
//   mu = min(mu_w, B, C / d)
// over wireless rate, allocated bandwidth, and compute translated to bits/s
// through the per-bit demand d. The end-to-end latency is a per-domain
// queueing-style sum
//   D = sum_R tau / (max(mu_R - lambda, 0) + eps)
// with a stabilizer eps that bounds the saturated-domain contribution at
// tau/eps. Both forms are reconstructions of the bottleneck/latency models;
// the summation over domains (rather than the bottleneck domain alone) is a
// documented modeling choice.

namespace slicesim {

template <typename Scalar>
Scalar bottleneck_rate(Scalar wireless_rate, Scalar bandwidth_alloc,
                       Scalar compute_alloc, Scalar compute_demand) {
  if (!(compute_demand > Scalar(0))) {
    throw InputError("bottleneck_rate: compute demand must be > 0");
  }
  return std::min({wireless_rate, bandwidth_alloc,
                   compute_alloc / compute_demand});
}

// `service_rates` holds one effective rate (bits/s) per resource domain.
template <typename Derived>
double end_to_end_delay(double packet_size, double arrival_rate,
                        const Eigen::MatrixBase<Derived>& service_rates,
                        double eps) {
  if (!(eps > 0.0)) throw InputError("end_to_end_delay: eps must be > 0");
  if (service_rates.size() != kNumDomains) {
    throw InputError("end_to_end_delay: expected one service rate per domain");
  }
  double total = 0.0;
  for (int d = 0; d < kNumDomains; ++d) {
    const double margin = std::max(service_rates(d) - arrival_rate, 0.0);
    total += packet_size / (margin + eps);
  }
  return total;
}

// Jain fairness index (sum x)^2 / (n sum x^2); 1 for equal shares, 1/n for a
// single nonzero share. The empty and all-zero cases report perfect fairness.
template <typename Derived>
double jain_index(const Eigen::MatrixBase<Derived>& x) {
  const auto n = x.size();
  if (n == 0) return 1.0;
  const double s = x.sum();
  const double q = x.array().square().sum();
  if (q <= 0.0) return 1.0;
  return (s * s) / (static_cast<double>(n) * q);
}

inline double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace slicesim
