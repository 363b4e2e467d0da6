#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "slicesim/baselines.hpp"
#include "slicesim/metrics.hpp"
#include "slicesim/trainer.hpp"

namespace slicesim {

struct StepLog {
  int step = 0;
  double throughput_bps = 0;
  double satisfaction = 0;
  Eigen::Vector3d utilization = Eigen::Vector3d::Zero();  // fractions in [0,1]
  Eigen::VectorXd objective_u, weights, costs, multipliers;

  json to_json() const;
};

struct EvalRun {
  std::vector<StepLog> steps;
  double satisfaction_rate = 0;  // over all (user, step) pairs
  double mean_throughput_bps = 0;
  Eigen::Vector3d mean_utilization = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> usage_series;  // absolute per-domain usage

  json summary_json() const;
};

// One full episode of `env` under `policy`; kappa feeds the logged adaptive
// weights (reward bookkeeping only — evaluation never trains).
EvalRun run_episode(DecisionPolicy& policy, SliceEnv& env, double kappa);

std::string checkpoint_path(const ExperimentConfig& cfg, const std::string& method);

// Builds the named method. Learned methods load their checkpoint from the
// experiment's checkpoint directory and throw InputError when it is missing.
std::unique_ptr<DecisionPolicy> make_decision_policy(const ExperimentConfig& cfg,
                                                     const std::string& method);

// Trains the named learned method and writes checkpoint + metrics under the
// experiment's output directory. No-op-with-warning for heuristics.
void train_method(const ExperimentConfig& cfg, const std::string& method);

struct SweepPoint {
  double load = 0;
  double mean = 0;
  double stddev = 0;
  std::vector<double> per_seed;
};

struct SweepResult {
  std::vector<std::string> methods;  // in config order, skipped ones removed
  std::map<std::string, std::vector<SweepPoint>> curves;  // loads ascending
  std::vector<std::string> skipped;

  json to_json() const;
};

SweepResult load_sweep(const ExperimentConfig& cfg);
void write_sweep_outputs(const SweepResult& result, const std::string& out_dir);

struct TraceResult {
  std::vector<std::string> methods;
  std::map<std::string, std::vector<double>> served_bps;  // aligned per step
  std::vector<std::string> skipped;
  int boost_start = 0, boost_len = 0;
  double load = 0;

  json to_json() const;
};

TraceResult throughput_trace(const ExperimentConfig& cfg);
void write_trace_outputs(const TraceResult& result, const std::string& out_dir);

struct UtilizationResult {
  std::string method;
  std::vector<UtilizationRow> rows;

  json to_json() const;
};

// Table-1-style report: the method runs on a slowly rising load ramp and the
// episode is split into time-slot buckets.
UtilizationResult utilization_run(const ExperimentConfig& cfg, const std::string& method);
void write_utilization_outputs(const UtilizationResult& result, const std::string& out_dir);

// Single evaluation cell (method, load, seed) with full step logs persisted.
EvalRun evaluate_cell(const ExperimentConfig& cfg, DecisionPolicy& policy, double load,
                      unsigned long seed);
void write_eval_outputs(const ExperimentConfig& cfg, const std::string& method, double load,
                        unsigned long seed, const EvalRun& run);

// Regenerates every figure from previously written result files.
void plot_from_results(const std::string& out_dir);

}  // namespace slicesim
