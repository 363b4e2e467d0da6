#pragma once

#include <Eigen/Dense>

#include "slicesim/env.hpp"

namespace slicesim {

// Objectives in fixed order: delay, throughput, reliability, fairness,
// isolation. Utilities u and violation scores v = 1 - u all live in [0, 1].
inline constexpr int kNumObjectives = 5;

inline const char* objective_name(int o) {
  static const char* names[kNumObjectives] = {"delay", "throughput", "reliability", "fairness",
                                              "isolation"};
  return names[o];
}

struct ObjectiveVector {
  Eigen::VectorXd u;  // kNumObjectives
  Eigen::VectorXd v;  // 1 - u
};

// Per-step utilities from one environment step:
//   delay       mean over users of clip(delay_bound / delay)
//   throughput  mean over users of clip(rate / min_throughput)
//   reliability mean reliability
//   fairness    Jain index of per-slice throughputs normalized by demand
//   isolation   mean projection scale (1 - overdraw caused by the raw action)
ObjectiveVector objective_vector(const StepOutcome& outcome, const Scenario& scenario);

// Softmax weighting w_o = exp(kappa v_o) / sum exp(kappa v), so the objective
// with the largest violation carries the largest weight; kappa = 0 is uniform.
Eigen::VectorXd adaptive_weights(const Eigen::VectorXd& violations, double kappa);

double base_reward(const Eigen::VectorXd& utilities, const Eigen::VectorXd& weights);

// Potential-based shaping r + beta*phi(s') - phi(s).
double shaped_reward(double reward, double potential_s, double potential_next, double discount);

double penalized_reward(double shaped, const Eigen::VectorXd& costs,
                        const Eigen::VectorXd& multipliers);

// State-only shaping potential: mean QoS margin across slices, in [0, 1];
// zero at episode start before any step has been observed.
double shaping_potential(const EnvState& state);

struct ConstraintState {
  Eigen::VectorXd multipliers;   // lambda_k >= 0
  Eigen::VectorXd bounds;        // C_k
  Eigen::VectorXd running_cost;  // last batch-mean costs J_k
  double eta = 0.01;

  static ConstraintState init(const Eigen::VectorXd& bounds, double eta);
};

// Projected dual ascent: lambda_k <- max(0, lambda_k + eta*(J_k - C_k)),
// applied once per training iteration on batch-mean costs.
ConstraintState dual_update(const ConstraintState& state, const Eigen::VectorXd& batch_mean_costs);

}  // namespace slicesim
