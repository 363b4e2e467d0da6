#pragma once

#include <filesystem>
#include <string>

#include "slicesim/env.hpp"
#include "slicesim/rng.hpp"
#include "slicesim/traffic.hpp"

namespace slicesim::testing {

// Two slices, two cells, four users. Capacities leave headroom at nominal
// load so happy-path checks are easy to reason about.
inline Scenario two_slice_scenario() {
  Scenario sc;
  sc.name = "test-two-slice";
  sc.dt = 1.0;
  sc.epsilon = 1e-6;
  sc.horizon = 50;
  sc.seed = 1;
  sc.num_cells = 2;
  sc.pool.capacity << 40e6, 40e6, 20e6;

  SliceSpec embb;
  embb.id = "embb";
  embb.service_class = ServiceClass::eMBB;
  embb.delay_bound = 0.1;
  embb.min_throughput = 4e6;
  embb.reliability_target = 0.9;
  embb.priority = 2.0;
  SliceSpec urllc;
  urllc.id = "urllc";
  urllc.service_class = ServiceClass::URLLC;
  urllc.delay_bound = 0.02;
  urllc.min_throughput = 1e6;
  urllc.reliability_target = 0.95;
  urllc.priority = 3.0;
  sc.slices = {embb, urllc};

  auto user = [](std::string id, int slice, int cell, double lambda, double tau, double d,
                 double mu_w) {
    UserSession u;
    u.id = std::move(id);
    u.slice = slice;
    u.cell = cell;
    u.arrival_rate = lambda;
    u.packet_size = tau;
    u.compute_demand = d;
    u.wireless_rate = mu_w;
    return u;
  };
  sc.users = {user("e0", 0, 0, 4e6, 12000, 0.5, 4e7), user("e1", 0, 1, 6e6, 12000, 0.5, 4e7),
              user("u0", 1, 0, 5e5, 4000, 0.25, 2e7), user("u1", 1, 1, 8e5, 4000, 0.25, 2e7)};
  sc.finalize();
  return sc;
}

inline TrafficTrace constant_trace(const Scenario& sc, double level, int horizon = -1) {
  TrafficTrace t;
  t.multipliers =
      Eigen::MatrixXd::Constant(horizon > 0 ? horizon : sc.horizon, sc.num_slices(), level);
  t.load_level = level;
  return t;
}

inline AllocationDecision random_decision(const Scenario& sc, Rng& rng, double scale = 1.5) {
  AllocationDecision d = AllocationDecision::zeros(sc.num_slices(), sc.num_users());
  for (int s = 0; s < sc.num_slices(); ++s) {
    d.admissions[s] = rng.uniform() < 0.8 ? 1 : 0;
    for (int k = 0; k < kNumDomains; ++k) {
      d.slice_budgets(s, k) = rng.uniform() * scale * sc.pool.capacity[k] / sc.num_slices();
    }
  }
  for (int u = 0; u < sc.num_users(); ++u) {
    const int s = sc.users[u].slice;
    for (int k = 0; k < kNumDomains; ++k) {
      d.user_allocations(u, k) = rng.uniform() * scale * d.slice_budgets(s, k);
    }
  }
  return d;
}

// Scratch directory unique per test binary run.
inline std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("slicesim_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace slicesim::testing
