#include "slicesim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "slicesim/plot.hpp"
#include "slicesim/reward.hpp"
#include "slicesim/traffic.hpp"

namespace slicesim {

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

int effective_horizon(const ExperimentConfig& cfg) {
  return cfg.horizon > 0 ? cfg.horizon : cfg.scenario.horizon;
}

Scenario eval_scenario(const ExperimentConfig& cfg) {
  Scenario sc = cfg.scenario;
  sc.horizon = effective_horizon(cfg);
  return sc;
}

std::string sanitize(double v) {
  std::string s = std::to_string(v);
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  return s;
}

}  // namespace

json StepLog::to_json() const {
  return json{{"step", step},
              {"throughput_bps", throughput_bps},
              {"satisfaction", satisfaction},
              {"utilization", std::vector<double>{utilization[0], utilization[1], utilization[2]}},
              {"objective_u", to_vec(objective_u)},
              {"weights", to_vec(weights)},
              {"costs", to_vec(costs)},
              {"lambda", to_vec(multipliers)}};
}

json EvalRun::summary_json() const {
  return json{{"satisfaction_rate", satisfaction_rate},
              {"mean_throughput_bps", mean_throughput_bps},
              {"mean_utilization", std::vector<double>{mean_utilization[0], mean_utilization[1],
                                                       mean_utilization[2]}},
              {"steps", static_cast<int>(steps.size())}};
}

EvalRun run_episode(DecisionPolicy& policy, SliceEnv& env, double kappa) {
  EvalRun run;
  policy.begin_episode();
  env.reset();
  Rng rng(7);  // deterministic-mode policies ignore it; kept for interface parity

  std::vector<QoSRecord> all_records;
  const Eigen::Vector3d capacity = env.scenario().pool.capacity;
  // Evaluation logs the duals at zero; constraint pricing is a training-time
  // construct.
  const Eigen::VectorXd zero_duals = Eigen::VectorXd::Zero(kNumConstraints);

  while (!env.done()) {
    const int step_index = env.state().step_index;
    Observation obs = build_observation(env);
    StepOutcome outcome = env.step(policy.decide(obs, env, rng));
    const ObjectiveVector objv = objective_vector(outcome, env.scenario());

    StepLog log;
    log.step = step_index;
    log.throughput_bps = outcome.served_bits / env.scenario().dt;
    int satisfied = 0;
    for (const auto& rec : outcome.records) satisfied += rec.satisfied() ? 1 : 0;
    log.satisfaction = outcome.records.empty()
                           ? 1.0
                           : static_cast<double>(satisfied) / outcome.records.size();
    log.utilization = outcome.domain_usage.cwiseQuotient(capacity);
    log.objective_u = objv.u;
    log.weights = adaptive_weights(objv.v, kappa);
    log.costs = outcome.costs;
    log.multipliers = zero_duals;
    run.steps.push_back(std::move(log));
    run.usage_series.push_back(outcome.domain_usage);

    all_records.insert(all_records.end(), outcome.records.begin(), outcome.records.end());
  }

  run.satisfaction_rate = qos_satisfaction_rate(all_records);
  double tp = 0;
  Eigen::Vector3d util = Eigen::Vector3d::Zero();
  for (const auto& s : run.steps) {
    tp += s.throughput_bps;
    util += s.utilization;
  }
  run.mean_throughput_bps = tp / std::max<size_t>(1, run.steps.size());
  run.mean_utilization = util / std::max<size_t>(1, run.steps.size());
  return run;
}

std::string checkpoint_path(const ExperimentConfig& cfg, const std::string& method) {
  return cfg.out_dir + "/checkpoints/" + method + ".json";
}

std::unique_ptr<DecisionPolicy> make_decision_policy(const ExperimentConfig& cfg,
                                                     const std::string& method) {
  const Scenario sc = eval_scenario(cfg);
  if (method == "static") {
    Eigen::VectorXd shares;
    if (!cfg.static_shares.empty()) {
      shares = Eigen::Map<const Eigen::VectorXd>(cfg.static_shares.data(),
                                                 cfg.static_shares.size());
      if (shares.minCoeff() < 0 || std::abs(shares.sum() - 1.0) > 1e-6) {
        throw ConfigError("static_shares must lie on the simplex");
      }
    } else {
      shares = priority_proportional_shares(sc);
    }
    return std::make_unique<StaticPolicy>(shares);
  }
  if (method == "greedy") return std::make_unique<GreedyPolicy>();
  if (method == "hm_ppo" || method == "standard_ppo") {
    const std::string path = checkpoint_path(cfg, method);
    if (!std::filesystem::exists(path)) {
      throw InputError("missing checkpoint for method '" + method + "': " + path);
    }
    auto trainer = std::make_shared<Trainer>(Trainer::load_checkpoint(path, sc));
    auto holder = std::shared_ptr<ActorCritic>(trainer, &trainer->policy());
    return std::make_unique<ActorCriticDecisionPolicy>(holder, trainer->config().upper_period,
                                                       method);
  }
  if (method == "dqn") {
    const std::string path = checkpoint_path(cfg, method);
    if (!std::filesystem::exists(path)) {
      throw InputError("missing checkpoint for method 'dqn': " + path);
    }
    auto agent = std::make_shared<DqnAgent>(DqnAgent::load(path, sc));
    return std::make_unique<DqnDecisionPolicy>(agent);
  }
  throw ConfigError("unknown method: " + method);
}

void train_method(const ExperimentConfig& cfg, const std::string& method) {
  std::filesystem::create_directories(cfg.out_dir + "/checkpoints");
  std::filesystem::create_directories(cfg.out_dir + "/metrics");
  const std::string metrics_path = cfg.out_dir + "/metrics/" + method + "_train.jsonl";
  std::filesystem::remove(metrics_path);  // fresh log per train invocation

  if (method == "hm_ppo" || method == "standard_ppo") {
    Trainer trainer(eval_scenario(cfg), cfg.train, cfg.traffic, method);
    trainer.train(metrics_path);
    trainer.save_checkpoint(checkpoint_path(cfg, method));
    return;
  }
  if (method == "dqn") {
    DqnConfig dqn_cfg;
    dqn_cfg.gamma = cfg.train.discount;
    DqnAgent agent(eval_scenario(cfg), dqn_cfg, cfg.train.seed);
    agent.train(cfg.traffic, cfg.train.train_loads, cfg.train.train_pattern,
                cfg.train.total_steps, metrics_path);
    agent.save(checkpoint_path(cfg, method));
    return;
  }
  if (method == "static" || method == "greedy") {
    std::cerr << "[slicesim] method '" << method << "' needs no training\n";
    return;
  }
  throw ConfigError("unknown method: " + method);
}

json SweepResult::to_json() const {
  json j;
  j["methods"] = methods;
  j["skipped"] = skipped;
  json curves_json = json::object();
  for (const auto& [method, points] : curves) {
    json arr = json::array();
    for (const auto& p : points) {
      arr.push_back(json{{"load", p.load},
                         {"mean", p.mean},
                         {"stddev", p.stddev},
                         {"per_seed", p.per_seed}});
    }
    curves_json[method] = std::move(arr);
  }
  j["curves"] = std::move(curves_json);
  return j;
}

EvalRun evaluate_cell(const ExperimentConfig& cfg, DecisionPolicy& policy, double load,
                      unsigned long seed) {
  const Scenario sc = eval_scenario(cfg);
  TrafficTrace trace =
      make_trace(cfg.traffic, sc, load, sc.horizon, seed, cfg.out_dir + "/cache");
  SliceEnv env(sc, std::move(trace), cfg.train.history_window);
  return run_episode(policy, env, cfg.train.kappa);
}

SweepResult load_sweep(const ExperimentConfig& cfg) {
  std::vector<double> loads = cfg.loads;
  std::sort(loads.begin(), loads.end());  // canonical ascending output order
  loads.erase(std::unique(loads.begin(), loads.end()), loads.end());

  SweepResult result;
  for (const auto& method : cfg.sweep_methods) {
    std::unique_ptr<DecisionPolicy> policy;
    try {
      policy = make_decision_policy(cfg, method);
    } catch (const std::exception& e) {
      std::cerr << "[slicesim] skipping method '" << method << "': " << e.what() << "\n";
      result.skipped.push_back(method);
      continue;
    }
    std::vector<SweepPoint> curve;
    for (double load : loads) {
      SweepPoint point;
      point.load = load;
      for (unsigned long seed : cfg.seeds) {
        const EvalRun run = evaluate_cell(cfg, *policy, load, seed);
        point.per_seed.push_back(run.satisfaction_rate);
      }
      const Eigen::Map<const Eigen::VectorXd> vals(point.per_seed.data(), point.per_seed.size());
      point.mean = vals.mean();
      point.stddev = point.per_seed.size() > 1
                         ? std::sqrt((vals.array() - point.mean).square().sum() /
                                     (vals.size() - 1))
                         : 0.0;
      curve.push_back(std::move(point));
    }
    result.methods.push_back(method);
    result.curves[method] = std::move(curve);
  }
  return result;
}

namespace {

void plot_sweep(const SweepResult& result, const std::string& out_dir) {
  std::vector<PlotSeries> series;
  for (const auto& method : result.methods) {
    PlotSeries s;
    s.label = method;
    for (const auto& p : result.curves.at(method)) {
      s.x.push_back(p.load);
      s.y.push_back(p.mean);
      s.err.push_back(p.stddev);
    }
    series.push_back(std::move(s));
  }
  write_svg_chart(out_dir + "/plots/fig1_qos_satisfaction.svg",
                  "QoS satisfaction rate vs normalized traffic load", "normalized traffic load",
                  "QoS satisfaction rate", series);
}

void plot_trace(const TraceResult& result, const std::string& out_dir) {
  std::vector<PlotSeries> series;
  for (const auto& method : result.methods) {
    PlotSeries s;
    s.label = method;
    const auto& v = result.served_bps.at(method);
    for (size_t t = 0; t < v.size(); ++t) {
      s.x.push_back(static_cast<double>(t));
      s.y.push_back(v[t]);
    }
    series.push_back(std::move(s));
  }
  PlotWindow window{static_cast<double>(result.boost_start),
                    static_cast<double>(result.boost_start + result.boost_len)};
  write_svg_chart(out_dir + "/plots/fig2_throughput.svg",
                  "System throughput under dynamic traffic", "control step", "served bits/s",
                  series, window);
}

}  // namespace

void write_sweep_outputs(const SweepResult& result, const std::string& out_dir) {
  write_text_file(out_dir + "/results/sweep.json", result.to_json().dump(2) + "\n");
  plot_sweep(result, out_dir);
}

json TraceResult::to_json() const {
  json j;
  j["methods"] = methods;
  j["skipped"] = skipped;
  j["boost_start"] = boost_start;
  j["boost_len"] = boost_len;
  j["load"] = load;
  j["served_bps"] = served_bps;
  return j;
}

TraceResult throughput_trace(const ExperimentConfig& cfg) {
  const Scenario sc = eval_scenario(cfg);
  TraceResult result;
  result.load = cfg.loads.empty() ? 0.8 : cfg.loads[cfg.loads.size() / 2];

  // One shared traffic trace with a highlighted high-load window.
  TrafficConfig tc = cfg.traffic;
  if (tc.boost_start < 0 || tc.boost_len <= 0) {
    tc.boost_start = sc.horizon * 2 / 5;
    tc.boost_len = sc.horizon / 5;
  }
  result.boost_start = tc.boost_start;
  result.boost_len = tc.boost_len;
  const unsigned long seed = cfg.seeds.front();
  TrafficTrace trace = make_trace(tc, sc, result.load, sc.horizon, seed, cfg.out_dir + "/cache");

  for (const auto& method : cfg.sweep_methods) {
    std::unique_ptr<DecisionPolicy> policy;
    try {
      policy = make_decision_policy(cfg, method);
    } catch (const std::exception& e) {
      std::cerr << "[slicesim] skipping method '" << method << "': " << e.what() << "\n";
      result.skipped.push_back(method);
      continue;
    }
    SliceEnv env(sc, trace, cfg.train.history_window);
    const EvalRun run = run_episode(*policy, env, cfg.train.kappa);
    std::vector<double> series;
    series.reserve(run.steps.size());
    for (const auto& s : run.steps) series.push_back(s.throughput_bps);
    result.methods.push_back(method);
    result.served_bps[method] = std::move(series);
  }
  return result;
}

void write_trace_outputs(const TraceResult& result, const std::string& out_dir) {
  // Step logs as line-delimited records plus one summary document.
  std::ostringstream lines;
  size_t T = 0;
  for (const auto& [m, v] : result.served_bps) T = std::max(T, v.size());
  for (size_t t = 0; t < T; ++t) {
    json row{{"step", t}};
    for (const auto& method : result.methods) {
      const auto& v = result.served_bps.at(method);
      if (t < v.size()) row[method] = v[t];
    }
    lines << row.dump() << "\n";
  }
  write_text_file(out_dir + "/results/trace.jsonl", lines.str());
  write_text_file(out_dir + "/results/trace.json", result.to_json().dump(2) + "\n");
  plot_trace(result, out_dir);
}

json UtilizationResult::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back(json{{"slot", r.label},
                             {"radio_pct", r.radio_pct},
                             {"bandwidth_pct", r.bandwidth_pct},
                             {"compute_pct", r.compute_pct},
                             {"overall_pct", r.overall_pct}});
  }
  return json{{"method", method}, {"rows", rows_json}};
}

UtilizationResult utilization_run(const ExperimentConfig& cfg, const std::string& method) {
  const Scenario sc = eval_scenario(cfg);
  auto policy = make_decision_policy(cfg, method);

  // Rising load ramp so the time slots span low to very high demand.
  TrafficTrace ramp;
  ramp.multipliers.resize(sc.horizon, sc.num_slices());
  const double lo = 0.3, hi = 1.1;
  for (int t = 0; t < sc.horizon; ++t) {
    const double m = lo + (hi - lo) * (sc.horizon > 1 ? static_cast<double>(t) / (sc.horizon - 1) : 0.0);
    ramp.multipliers.row(t).setConstant(m);
  }
  ramp.load_level = (lo + hi) / 2;

  SliceEnv env(sc, std::move(ramp), cfg.train.history_window);
  const EvalRun run = run_episode(*policy, env, cfg.train.kappa);

  UtilizationResult result;
  result.method = method;
  result.rows = utilization_report(run.usage_series, sc.pool.capacity, cfg.utilization_buckets);
  return result;
}

void write_utilization_outputs(const UtilizationResult& result, const std::string& out_dir) {
  write_text_file(out_dir + "/results/utilization.json", result.to_json().dump(2) + "\n");
  write_text_file(out_dir + "/results/utilization.txt", utilization_table(result.rows));
}

void write_eval_outputs(const ExperimentConfig& cfg, const std::string& method, double load,
                        unsigned long seed, const EvalRun& run) {
  const std::string stem = cfg.out_dir + "/results/evaluate_" + method + "_load" +
                           sanitize(load) + "_seed" + std::to_string(seed);
  std::ostringstream lines;
  for (const auto& s : run.steps) lines << s.to_json().dump() << "\n";
  write_text_file(stem + ".jsonl", lines.str());
  json summary = run.summary_json();
  summary["method"] = method;
  summary["load"] = load;
  summary["seed"] = seed;
  write_text_file(stem + ".json", summary.dump(2) + "\n");
}

void plot_from_results(const std::string& out_dir) {
  const std::string sweep_path = out_dir + "/results/sweep.json";
  const std::string trace_path = out_dir + "/results/trace.json";
  bool plotted = false;

  if (std::filesystem::exists(sweep_path)) {
    const json j = load_json_file(sweep_path);
    SweepResult result;
    result.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& method : result.methods) {
      std::vector<SweepPoint> curve;
      for (const auto& pj : j.at("curves").at(method)) {
        SweepPoint p;
        p.load = pj.at("load").get<double>();
        p.mean = pj.at("mean").get<double>();
        p.stddev = pj.at("stddev").get<double>();
        p.per_seed = pj.at("per_seed").get<std::vector<double>>();
        curve.push_back(std::move(p));
      }
      result.curves[method] = std::move(curve);
    }
    plot_sweep(result, out_dir);
    plotted = true;
  }
  if (std::filesystem::exists(trace_path)) {
    const json j = load_json_file(trace_path);
    TraceResult result;
    result.methods = j.at("methods").get<std::vector<std::string>>();
    result.boost_start = j.at("boost_start").get<int>();
    result.boost_len = j.at("boost_len").get<int>();
    result.load = j.at("load").get<double>();
    for (const auto& method : result.methods) {
      result.served_bps[method] = j.at("served_bps").at(method).get<std::vector<double>>();
    }
    plot_trace(result, out_dir);
    plotted = true;
  }
  if (!plotted) {
    throw InputError("plot: no result files found under " + out_dir + "/results");
  }
}

}  // namespace slicesim
