#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slicesim/policy.hpp"
#include "slicesim/reward.hpp"

namespace slicesim {

// Generalized advantage estimation:
//   delta_t = r_t + beta*V_{t+1}*(1-done_t) - V_t
//   A_t     = delta_t + beta*lambda*(1-done_t)*A_{t+1}
// with V_{T} = bootstrap_value. Returns (advantages, returns = A + V).
std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_gae(
    const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
    const std::vector<char>& dones, double bootstrap_value, double discount,
    double gae_lambda);

// Clipped PPO surrogate for one sample: -min(r*A, clip(r, 1-e, 1+e)*A).
double ppo_clip_loss(double ratio, double advantage, double clip);

// Trajectory storage for one iteration; all columns aligned by step index.
struct RolloutBuffer {
  std::vector<Observation> observations;
  std::vector<HierarchicalAction> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> base_rewards;
  std::vector<double> shaped_rewards;
  std::vector<double> penalized_rewards;
  std::vector<double> potentials;  // phi(s) before the step
  std::vector<double> satisfaction;
  Eigen::MatrixXd costs;        // capacity x kNumConstraints
  Eigen::MatrixXd cost_values;  // capacity x kNumConstraints
  Eigen::MatrixXd weights;      // capacity x kNumObjectives
  std::vector<char> dones;
  int size = 0;

  void reset(int capacity);
  int capacity() const { return static_cast<int>(observations.size()); }
};

struct IterationMetrics {
  long iteration = 0;
  long env_steps = 0;
  double mean_reward_base = 0, mean_reward_shaped = 0, mean_reward_penalized = 0;
  Eigen::VectorXd mean_costs;        // kNumConstraints
  Eigen::VectorXd multipliers;       // lambda_k after the dual update
  Eigen::VectorXd mean_weights;      // kNumObjectives
  double qos_satisfaction = 0;
  double policy_loss = 0, value_loss = 0, entropy = 0;
  double mean_abs_ratio_gap = 0;  // mean |ratio - 1| over the last epoch

  json to_json() const;
};

// Constrained PPO over either actor-critic. The trainer owns the policy, the
// optimizer state, the dual multipliers, and the only RNG used during
// training, so a (seed, config) pair fixes the metric log bit for bit.
class Trainer {
 public:
  Trainer(Scenario scenario, TrainConfig cfg, TrafficConfig traffic, std::string method);

  // Runs until total_steps; appends one JSONL metrics line per iteration to
  // `metrics_path` (if non-empty) and returns the full metric history.
  std::vector<IterationMetrics> train(const std::string& metrics_path = "");

  // Runs exactly `iterations` more iterations (used by resume tests).
  std::vector<IterationMetrics> train_iterations(int iterations,
                                                 const std::string& metrics_path = "");

  void save_checkpoint(const std::string& path) const;
  static Trainer load_checkpoint(const std::string& path);
  // Loads and validates against an explicit scenario (dimension mismatch is an
  // error); used by the evaluation side.
  static Trainer load_checkpoint(const std::string& path, const Scenario& scenario);

  ActorCritic& policy() { return *policy_; }
  const ConstraintState& constraints() const { return constraints_; }
  const TrainConfig& config() const { return cfg_; }
  const Scenario& scenario() const { return scenario_; }
  long iteration() const { return iteration_; }
  long env_steps() const { return env_steps_; }

 private:
  struct CollectResult {
    double bootstrap_value = 0;
    Eigen::VectorXd bootstrap_costs;
  };
  CollectResult collect_rollout(RolloutBuffer& buffer);
  IterationMetrics update(RolloutBuffer& buffer, const CollectResult& boot);

  Scenario scenario_;
  TrainConfig cfg_;
  TrafficConfig traffic_;
  std::string method_;
  std::unique_ptr<ActorCritic> policy_;
  std::unique_ptr<nn::Adam> adam_policy_;
  std::unique_ptr<nn::Adam> adam_value_;
  ConstraintState constraints_;
  Rng rng_;
  long iteration_ = 0;
  long env_steps_ = 0;

  // Episode state carried across rollout boundaries is intentionally absent:
  // every rollout starts a fresh episode, so checkpoints do not need to
  // serialize environment internals.
};

}  // namespace slicesim
