#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "slicesim/types.hpp"

namespace slicesim {

using json = nlohmann::json;

// Constraint channels priced by the Lagrangian machinery, in fixed order.
enum class Constraint : int { DelayViolation = 0, ReliabilityViolation = 1, IsolationOverdraw = 2 };
inline constexpr int kNumConstraints = 3;

inline const char* constraint_name(int k) {
  static const char* names[kNumConstraints] = {"delay", "reliability", "isolation"};
  return names[k];
}

// A fully resolved simulation scenario. Users reference slices by dense index
// after finalize(); string ids are kept for config round-trips and reports.
struct Scenario {
  std::string name = "scenario";
  double dt = 1.0;                // seconds of simulated time per control step
  double epsilon = 1e-6;          // delay stabilizer, bits/s
  double radio_unit_rate = 1.0;   // bits/s of wireless service per radio unit
  int horizon = 200;              // steps per episode
  unsigned long seed = 1;
  int num_cells = 1;
  ResourcePool pool;
  std::vector<SliceSpec> slices;
  std::vector<UserSession> users;
  Eigen::VectorXd constraint_bounds;  // C_k, size kNumConstraints

  std::vector<std::vector<int>> slice_users;  // derived by finalize()

  int num_slices() const { return static_cast<int>(slices.size()); }
  int num_users() const { return static_cast<int>(users.size()); }

  // Resolves user->slice indices, builds slice_users, validates invariants.
  void finalize();

  int slice_index(const std::string& id) const;  // throws InputError if unknown

  static Scenario from_json(const json& j);
  static Scenario load_file(const std::string& path);
  json to_json() const;
};

// PPO training hyperparameters. None of these come from the underlying
// method description; defaults are documented choices.
struct TrainConfig {
  double discount = 0.99;       // beta
  double gae_lambda = 0.95;
  double clip = 0.2;            // epsilon_clip
  int epochs = 4;
  int minibatch = 256;
  int rollout = 2048;           // steps per iteration
  long total_steps = 200000;
  double lr_policy = 3e-4;
  double lr_value = 1e-3;
  double dual_eta = 0.01;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double cost_value_coef = 0.25;
  unsigned long seed = 1;

  int upper_period = 5;         // upper-level decision every K env steps
  double kappa = 2.0;           // objective-weight sensitivity
  bool use_shaping = true;
  bool use_duals = true;
  bool use_adaptive_weights = true;
  bool alternate_levels = false;  // update upper/lower on alternating iterations

  int embed_dim = 64;
  int gat_heads = 2;
  int lstm_hidden = 16;
  int history_window = 8;       // H
  int hidden_dim = 128;         // flat baselines

  std::vector<double> train_loads{0.4, 0.6, 0.8, 1.0};  // sampled per episode
  std::string train_pattern = "diurnal";
  double divergence_guard = 10.0;  // abort when mean |ratio-1| exceeds this

  void validate() const;
  static TrainConfig from_json(const json& j);
  json to_json() const;
};

struct TrafficConfig {
  std::string source = "synthetic";  // "synthetic" | "cdr"
  std::string pattern = "diurnal";   // constant | diurnal | bursty
  std::string cdr_path;
  std::vector<long> cdr_cells;       // empty = all cells
  long time_begin_ms = 0;            // 0/0 = unfiltered
  long time_end_ms = 0;
  json slice_mapping;                // slice id -> list of CDR activity columns
  // Fig.2-style high-load window: multiplier boost applied to [start, start+len).
  double boost_factor = 1.5;
  int boost_start = -1;
  int boost_len = 0;

  static TrafficConfig from_json(const json& j);
  json to_json() const;
};

// One experiment: which scenario, which method, which traffic, which sweep.
struct ExperimentConfig {
  std::string scenario_path;
  Scenario scenario;
  std::string method = "hm_ppo";
  TrafficConfig traffic;
  std::vector<double> loads{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<unsigned long> seeds{1, 2, 3, 4, 5};
  int horizon = 0;  // 0 = use scenario horizon
  int eval_episodes = 1;
  std::string out_dir = "out";
  TrainConfig train;
  std::vector<std::string> sweep_methods{"hm_ppo", "standard_ppo", "dqn", "greedy", "static"};
  std::vector<double> static_shares;  // empty = proportional to slice priority
  int utilization_buckets = 10;

  void validate() const;
  static ExperimentConfig load_file(const std::string& path);
  static ExperimentConfig from_json(const json& j, const std::string& base_dir);
  json to_json() const;
};

json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace slicesim
