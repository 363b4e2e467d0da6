#pragma once

#include <memory>
#include <string>
#include <vector>

#include "slicesim/nn.hpp"
#include "slicesim/obs.hpp"

namespace slicesim {

// Raw head outputs for one observation (values only, no gradients).
struct PolicyOutput {
  Eigen::VectorXd admission_probs;  // per slice, in [0,1]
  Eigen::MatrixXd budget_logits;    // num_slices x kNumDomains
  Eigen::MatrixXd user_logits;      // num_users x kNumDomains
  double value = 0.0;
  Eigen::VectorXd cost_values;      // kNumConstraints
};

// The hierarchical action actually taken on one step. Budget and user logits
// are Gaussian samples around the actor's means; the deterministic
// softmax-and-scale mapping below turns them into an AllocationDecision.
// Between upper-level decision steps, admissions and absolute budgets are
// carried forward and only the user logits are re-sampled.
struct HierarchicalAction {
  bool upper_decision = false;
  Eigen::VectorXi admissions;    // per slice, 0/1
  Eigen::MatrixXd budget_z;      // num_slices x kNumDomains (0 where not admitted)
  Eigen::MatrixXd user_z;        // num_users x kNumDomains
  Eigen::MatrixXd held_budgets;  // num_slices x kNumDomains, absolute amounts
};

// Normalized exponentials over the admitted subset; non-admitted entries get
// exactly 0. All-zero mask yields the zero vector.
Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits,
                               const Eigen::VectorXi& mask);

// Lowers a hierarchical action to dense budgets/allocations:
// budgets = masked softmax of budget_z per domain x capacity (on upper steps;
// held budgets otherwise), user allocations = per-slice softmax of user_z per
// domain x that slice's budget.
AllocationDecision decision_from_action(const HierarchicalAction& action,
                                        const std::vector<int>& user_slice,
                                        const Eigen::Vector3d& capacity,
                                        Eigen::MatrixXd* budgets_out = nullptr);

enum class ActionMode { Sample, Greedy };

struct ActSample {
  HierarchicalAction action;
  AllocationDecision decision;
  double log_prob = 0.0;
  double value = 0.0;
  Eigen::VectorXd cost_values;
};

// Tape-backed action scores used by the PPO update.
struct ActionEval {
  ad::Var log_prob;
  ad::Var entropy;
  ad::Var value;
  ad::Var cost_values;  // 1 x kNumConstraints
};

class ActorCritic {
 public:
  virtual ~ActorCritic() = default;

  virtual std::string kind() const = 0;
  // Hierarchical actors re-decide admissions/budgets only on upper steps;
  // flat actors decide the full action every step.
  virtual bool hierarchical() const = 0;

  virtual ActSample act(const Observation& obs, ActionMode mode, Rng& rng,
                        bool upper_step, const HierarchicalAction* held) = 0;
  virtual ActionEval evaluate(ad::Tape& tape, const Observation& obs,
                              const HierarchicalAction& action) = 0;
  virtual PolicyOutput forward(const Observation& obs) = 0;

  virtual std::vector<ad::Param*> parameters() = 0;
  virtual std::vector<ad::Param*> value_parameters() = 0;
  virtual std::vector<ad::Param*> upper_parameters() = 0;
  virtual std::vector<ad::Param*> lower_parameters() = 0;

  virtual json hyperparams() const = 0;
};

struct PolicyDims {
  int num_slices = 0;
  int num_cells = 0;
  int num_users = 0;

  static PolicyDims of(const Scenario& sc) {
    return {sc.num_slices(), sc.num_cells, sc.num_users()};
  }
  bool operator==(const PolicyDims&) const = default;
};

// HM-PPO actor-critic: graph-attention + BiLSTM encoder, Bernoulli admission
// head, Gaussian budget/user heads, value and cost-value heads. One shared
// encoder feeds both hierarchy levels.
class SpatioTemporalPolicy : public ActorCritic {
 public:
  SpatioTemporalPolicy(const PolicyDims& dims, const TrainConfig& cfg,
                       const Eigen::Vector3d& capacity, unsigned long init_seed);

  std::string kind() const override { return "hm_ppo"; }
  bool hierarchical() const override { return true; }

  // Spatio-temporal embedding e = tanh(fuse(gat(graph) ++ bilstm(history))),
  // one row per slice. Exposed for tests.
  ad::Var encode(ad::Tape& tape, const Observation& obs);

  ActSample act(const Observation& obs, ActionMode mode, Rng& rng, bool upper_step,
                const HierarchicalAction* held) override;
  ActionEval evaluate(ad::Tape& tape, const Observation& obs,
                      const HierarchicalAction& action) override;
  PolicyOutput forward(const Observation& obs) override;

  std::vector<ad::Param*> parameters() override;
  std::vector<ad::Param*> value_parameters() override;
  std::vector<ad::Param*> upper_parameters() override;
  std::vector<ad::Param*> lower_parameters() override;
  json hyperparams() const override;

  const PolicyDims& dims() const { return dims_; }

 private:
  struct Heads {
    ad::Var embeddings;
    ad::Var adm_logits;    // S x 1
    ad::Var budget_means;  // S x kNumDomains
    ad::Var user_means;    // U x kNumDomains
    ad::Var value;         // 1x1
    ad::Var cost_values;   // 1 x kNumConstraints
    ad::Var log_std_budget, log_std_user;  // 1 x kNumDomains
  };
  Heads compute_heads(ad::Tape& tape, const Observation& obs);
  ActionEval score_action(ad::Tape& tape, const Heads& heads,
                          const Observation& obs, const HierarchicalAction& action);
  void check_action(const Observation& obs, const HierarchicalAction& action) const;

  PolicyDims dims_;
  int embed_dim_, history_len_;
  Eigen::Vector3d capacity_;
  nn::GatLayer gat_;
  nn::BiLstm lstm_;
  nn::Dense fuse_;
  nn::Dense adm_head_;
  nn::Dense budget_head_;
  nn::Dense user_hidden_;
  nn::Dense user_head_;
  nn::Dense value_hidden_;
  nn::Dense value_head_;
  nn::Dense cost_head_;
  ad::Param log_std_budget_, log_std_user_;
};

// Flat PPO actor-critic: a plain MLP on the flattened observation, direct
// per-slice budget ratios plus per-user ratios, every slice always admitted.
class FlatPolicy : public ActorCritic {
 public:
  FlatPolicy(const PolicyDims& dims, int flat_dim, const TrainConfig& cfg,
             const Eigen::Vector3d& capacity, unsigned long init_seed);

  std::string kind() const override { return "standard_ppo"; }
  bool hierarchical() const override { return false; }

  ActSample act(const Observation& obs, ActionMode mode, Rng& rng, bool upper_step,
                const HierarchicalAction* held) override;
  ActionEval evaluate(ad::Tape& tape, const Observation& obs,
                      const HierarchicalAction& action) override;
  PolicyOutput forward(const Observation& obs) override;

  std::vector<ad::Param*> parameters() override;
  std::vector<ad::Param*> value_parameters() override;
  std::vector<ad::Param*> upper_parameters() override;
  std::vector<ad::Param*> lower_parameters() override;
  json hyperparams() const override;

  const PolicyDims& dims() const { return dims_; }

 private:
  struct Heads {
    ad::Var budget_means, user_means, value, cost_values, log_std_budget, log_std_user;
  };
  Heads compute_heads(ad::Tape& tape, const Observation& obs);
  ActionEval score_action(ad::Tape& tape, const Heads& heads, const Observation& obs,
                          const HierarchicalAction& action);

  PolicyDims dims_;
  int flat_dim_;
  Eigen::Vector3d capacity_;
  nn::Dense h1_, h2_;
  nn::Dense budget_head_, user_head_;
  nn::Dense value_hidden_, value_head_, cost_head_;
  ad::Param log_std_budget_, log_std_user_;
};

// Versioned, self-describing policy state. Loading validates kind,
// hyperparameters, and scenario dimensions before touching any parameter.
json policy_state_to_json(ActorCritic& policy);
void policy_state_from_json(ActorCritic& policy, const json& j);

std::unique_ptr<ActorCritic> make_actor_critic(const std::string& kind, const Scenario& scenario,
                                               const TrainConfig& cfg);

}  // namespace slicesim
