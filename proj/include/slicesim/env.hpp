#pragma once

#include <Eigen/Dense>
#include <deque>
#include <vector>

#include "slicesim/config.hpp"
#include "slicesim/traffic.hpp"
#include "slicesim/types.hpp"

namespace slicesim {

// Per-slice history features pushed once per step (newest last):
// [load multiplier, backlog share, delay-violation rate, throughput-violation
//  rate, reliability-violation rate, radio/bandwidth/compute usage shares].
inline constexpr int kHistFeatureDim = 8;

struct EnvState {
  int step_index = 0;
  Eigen::VectorXd backlog;          // bits, per user, >= 0
  Eigen::VectorXd load_multiplier;  // per slice, multiplier in effect this step
  std::deque<Eigen::MatrixXd> history;  // each num_slices x kHistFeatureDim
  // QoS margins from the last completed step, one row per slice:
  // [delay margin, throughput margin, reliability margin], each in [0, 1].
  Eigen::MatrixXd slice_margins;
};

// How far a raw decision had to be squeezed to become feasible.
struct ProjectionReport {
  Eigen::VectorXd domain_scale;  // kNumDomains entries in (0, 1]
  Eigen::MatrixXd slice_scale;   // num_slices x kNumDomains user-level rescale

  double overdraw_cost() const {
    return (1.0 - domain_scale.array()).mean();
  }
};

// Projects a raw decision onto the feasible set: non-admitted slices are
// zeroed, per-domain budgets are rescaled proportionally to fit the pool,
// and per-slice user allocations are rescaled to fit their budget. Infeasible
// actions are never rejected, so the decision process stays total.
AllocationDecision project_decision(const AllocationDecision& raw, const Scenario& scenario,
                                    ProjectionReport* report = nullptr);

// Sum of one slice's user allocations in one domain; throws InputError on an
// unknown slice index.
double aggregate_slice_usage(const AllocationDecision& decision, const Scenario& scenario,
                             int slice, Domain domain);

struct StepOutcome {
  std::vector<QoSRecord> records;  // one per user
  Eigen::VectorXd costs;           // kNumConstraints, each in [0, 1]
  double served_bits = 0.0;
  Eigen::Vector3d domain_usage = Eigen::Vector3d::Zero();  // granted per domain
  AllocationDecision applied;      // the projected decision
  ProjectionReport projection;
  Eigen::VectorXd slice_served_rate;  // bits/s per slice
  Eigen::VectorXd slice_target_rate;  // demand/target normalizer per slice
};

// Discrete-time slicing environment. Single-threaded and deterministic:
// all stochasticity lives in the traffic trace it is constructed with.
class SliceEnv {
 public:
  SliceEnv(Scenario scenario, TrafficTrace trace, int history_len = 8);

  const EnvState& reset();
  // Replaces the traffic trace (used between episodes) without reallocating.
  void set_trace(TrafficTrace trace);

  StepOutcome step(const AllocationDecision& raw_decision);

  bool done() const { return state_.step_index >= scenario_.horizon; }
  const Scenario& scenario() const { return scenario_; }
  const EnvState& state() const { return state_; }
  const TrafficTrace& trace() const { return trace_; }
  int history_len() const { return history_len_; }

  // Effective per-user arrival rate at the current step (base rate scaled by
  // the slice's trace multiplier).
  double effective_arrival(int user) const;

 private:
  Scenario scenario_;
  TrafficTrace trace_;
  EnvState state_;
  int history_len_;
};

}  // namespace slicesim
