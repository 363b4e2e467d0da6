#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slicesim/nn.hpp"
#include "slicesim/obs.hpp"
#include "slicesim/policy.hpp"

namespace slicesim {

Eigen::VectorXd priority_proportional_shares(const Scenario& scenario);

// Fixed-share slicing: every slice admitted, budget = share x capacity per
// domain, equal split across the slice's users. Shares must lie on the
// simplex.
AllocationDecision static_allocate(const Eigen::VectorXd& shares, const Scenario& scenario);

// Demand-tracking heuristic: admit everything, walk users by (slice priority,
// then largest demand, then lowest user index) and grant each user its full
// QoS-relieving demand per domain until the pool runs out. The per-user
// demand targets enough rate to clear arrivals plus backlog and hold the
// delay bound with 2x headroom.
AllocationDecision greedy_allocate(const Scenario& scenario,
                                   const Eigen::VectorXd& load_multiplier,
                                   const Eigen::VectorXd& backlog);

// Uniform interface the evaluation harness drives: observation in, feasible
// decision out. Learned policies run in their deterministic (greedy) mode.
class DecisionPolicy {
 public:
  virtual ~DecisionPolicy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode() {}
  virtual AllocationDecision decide(const Observation& obs, const SliceEnv& env, Rng& rng) = 0;
};

class StaticPolicy : public DecisionPolicy {
 public:
  StaticPolicy(Eigen::VectorXd shares) : shares_(std::move(shares)) {}
  std::string name() const override { return "static"; }
  AllocationDecision decide(const Observation&, const SliceEnv& env, Rng&) override {
    return static_allocate(shares_, env.scenario());
  }

 private:
  Eigen::VectorXd shares_;
};

class GreedyPolicy : public DecisionPolicy {
 public:
  std::string name() const override { return "greedy"; }
  AllocationDecision decide(const Observation&, const SliceEnv& env, Rng&) override {
    return greedy_allocate(env.scenario(), env.state().load_multiplier, env.state().backlog);
  }
};

// Wraps a trained actor-critic; replays the hierarchical upper/lower cadence
// in deterministic mode.
class ActorCriticDecisionPolicy : public DecisionPolicy {
 public:
  ActorCriticDecisionPolicy(std::shared_ptr<ActorCritic> policy, int upper_period,
                            std::string label)
      : policy_(std::move(policy)), upper_period_(upper_period), label_(std::move(label)) {}

  std::string name() const override { return label_; }
  void begin_episode() override {
    held_.reset();
    step_ = 0;
  }
  AllocationDecision decide(const Observation& obs, const SliceEnv&, Rng& rng) override {
    const bool upper = policy_->hierarchical() ? (step_ % upper_period_ == 0) : true;
    ActSample s =
        policy_->act(obs, ActionMode::Greedy, rng, upper, held_ ? &*held_ : nullptr);
    held_ = s.action;
    ++step_;
    return s.decision;
  }

 private:
  std::shared_ptr<ActorCritic> policy_;
  int upper_period_;
  std::string label_;
  std::optional<HierarchicalAction> held_;
  int step_ = 0;
};

// ---- DQN baseline -------------------------------------------------------------

struct DqnConfig {
  int hidden = 128;
  double lr = 5e-4;
  double gamma = 0.99;
  int replay_capacity = 20000;
  int batch = 32;
  int target_sync = 500;   // env steps between target-network copies
  int train_every = 4;
  long warmup = 500;
  double eps_start = 1.0;
  double eps_end = 0.05;
  long eps_anneal = 30000;
  double q_guard = 1e6;  // divergence guard on |Q|
  int levels = 11;       // share quantization levels per domain

  static DqnConfig from_json(const json& j);
  json to_json() const;
};

struct DqnTransition {
  Eigen::VectorXd obs, next_obs;
  std::array<int, kNumDomains> action{};
  double reward = 0;
  bool done = false;
};

// Quantized-budget DQN: per resource domain the action picks one share
// template (all compositions of the quantization grid over slices); budgets
// follow the template, intra-slice split is equal. Q(s, a) factorizes as one
// head per domain.
class DqnAgent {
 public:
  DqnAgent(const Scenario& scenario, DqnConfig cfg, unsigned long seed);

  int num_templates() const { return static_cast<int>(templates_.size()); }
  const std::vector<Eigen::VectorXd>& templates() const { return templates_; }

  std::array<int, kNumDomains> greedy_action(const Eigen::VectorXd& flat_obs);
  std::array<int, kNumDomains> act_epsilon(const Eigen::VectorXd& flat_obs, double eps, Rng& rng);
  AllocationDecision decision_from(const std::array<int, kNumDomains>& action) const;

  // Q-learning with replay and a target network; one JSONL metrics line per
  // episode. Deterministic given (scenario, config, seed).
  std::vector<json> train(const TrafficConfig& traffic, const std::vector<double>& loads,
                          const std::string& pattern, long total_steps,
                          const std::string& metrics_path = "");

  double epsilon_at(long step) const;

  const std::vector<DqnTransition>& replay() const { return replay_; }
  std::vector<int> sample_replay_indices(int batch, Rng& rng) const;

  void save(const std::string& path) const;
  static DqnAgent load(const std::string& path, const Scenario& scenario);

  json hyperparams() const;

 private:
  struct QValues {
    std::vector<Eigen::MatrixXd> per_domain;  // each batch x num_templates
  };
  QValues q_forward(const Eigen::MatrixXd& flat_batch, bool use_target);
  void learn_batch(Rng& rng);
  void sync_target();
  std::vector<ad::Param*> online_params();

  Scenario scenario_;
  DqnConfig cfg_;
  int flat_dim_;
  std::vector<Eigen::VectorXd> templates_;
  nn::Dense h1_, h2_;
  std::vector<nn::Dense> heads_;
  nn::Dense t_h1_, t_h2_;
  std::vector<nn::Dense> t_heads_;
  std::unique_ptr<nn::Adam> adam_;
  std::vector<DqnTransition> replay_;
  int replay_next_ = 0;
  long steps_done_ = 0;
  Rng rng_;
};

class DqnDecisionPolicy : public DecisionPolicy {
 public:
  explicit DqnDecisionPolicy(std::shared_ptr<DqnAgent> agent) : agent_(std::move(agent)) {}
  std::string name() const override { return "dqn"; }
  AllocationDecision decide(const Observation& obs, const SliceEnv&, Rng&) override {
    return agent_->decision_from(agent_->greedy_action(flatten_observation(obs)));
  }

 private:
  std::shared_ptr<DqnAgent> agent_;
};

}  // namespace slicesim
