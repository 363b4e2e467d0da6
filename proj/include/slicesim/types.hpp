#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace slicesim {

// Malformed configs, schemas, CLI arguments. CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid runtime inputs: bad tensors, out-of-space actions, unreadable files.
// CLI maps this (and any other exception) to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ServiceClass { eMBB, URLLC, mMTC };

ServiceClass service_class_from_string(const std::string& s);
std::string to_string(ServiceClass c);

// The three resource domains a slice consumes. Radio is measured in abstract
// scheduling units per step, bandwidth in bits/s, compute in cycles/s.
enum class Domain : int { Radio = 0, Bandwidth = 1, Compute = 2 };

inline constexpr int kNumDomains = 3;

inline const char* domain_name(int d) {
  static const char* names[kNumDomains] = {"radio", "bandwidth", "compute"};
  return names[d];
}

struct SliceSpec {
  std::string id;
  ServiceClass service_class = ServiceClass::eMBB;
  double delay_bound = 0.1;         // seconds, > 0
  double min_throughput = 0.0;      // bits/s, >= 0
  double reliability_target = 0.9;  // [0, 1]
  double priority = 1.0;            // >= 0

  void validate() const;
};

struct UserSession {
  std::string id;
  int slice = -1;  // dense slice index within the scenario
  int cell = 0;
  double arrival_rate = 0.0;    // lambda, bits/s
  double packet_size = 1.0;     // tau, bits, > 0
  double compute_demand = 1.0;  // d, cycles/bit, > 0
  double wireless_rate = 0.0;   // mu_w, bits/s

  void validate() const;
};

struct ResourcePool {
  // [radio units/step, bandwidth bits/s, compute cycles/s], all > 0.
  Eigen::Vector3d capacity{1.0, 1.0, 1.0};

  double capacity_of(Domain d) const { return capacity[static_cast<int>(d)]; }
  void validate() const;
};

// Full hierarchical action after it has been lowered to dense per-slice /
// per-user amounts. Rows are scenario indices, columns resource domains.
struct AllocationDecision {
  Eigen::VectorXi admissions;        // num_slices, 0/1
  Eigen::MatrixXd slice_budgets;     // num_slices x kNumDomains
  Eigen::MatrixXd user_allocations;  // num_users x kNumDomains

  static AllocationDecision zeros(int num_slices, int num_users);
};

struct QoSRecord {
  int user = -1;
  double achieved_rate = 0.0;  // effective bottleneck service rate, bits/s
  double delay = 0.0;          // seconds
  double reliability = 1.0;    // [0, 1]
  double offered_bits = 0.0;
  double served_bits = 0.0;
  bool delay_violation = false;
  bool throughput_violation = false;
  bool reliability_violation = false;

  bool satisfied() const {
    return !delay_violation && !throughput_violation && !reliability_violation;
  }
};

}  // namespace slicesim
