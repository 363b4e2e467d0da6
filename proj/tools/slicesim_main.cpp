// Command-line front end: train methods, evaluate checkpoints, run the
// load sweep / throughput trace / utilization report, and regenerate plots.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "slicesim/eval.hpp"

using namespace slicesim;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  std::string method;
  long seed = -1;
};

ExperimentConfig resolve_config(const GlobalOpts& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = ExperimentConfig::load_file(g.config_path);
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (!g.method.empty()) cfg.method = g.method;
  if (g.seed >= 0) {
    cfg.train.seed = static_cast<unsigned long>(g.seed);
    cfg.seeds = {static_cast<unsigned long>(g.seed)};
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slicesim: network-slicing QoS simulation and training harness"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment config JSON")->envname("SLICESIM_CONFIG");
  app.add_option("--out-dir", g.out_dir, "override the experiment output directory");
  app.add_option("--method", g.method, "override the experiment method");
  app.add_option("--seed", g.seed, "override training seed / evaluation seed list");

  auto* cmd_train = app.add_subcommand("train", "train a learned method and write a checkpoint");

  double eval_load = -1.0;
  auto* cmd_eval = app.add_subcommand("evaluate", "evaluate one method at one load level");
  cmd_eval->add_option("--load", eval_load, "traffic load level (default: first config load)");

  auto* cmd_sweep = app.add_subcommand("sweep-load", "satisfaction-vs-load curves per method");
  auto* cmd_trace = app.add_subcommand("trace", "per-step throughput comparison on one trace");

  auto* cmd_util = app.add_subcommand("report-utilization",
                                      "per-time-slot resource utilization table");
  auto* cmd_plot = app.add_subcommand("plot", "regenerate figures from existing result files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (cmd_plot->parsed()) {
      // plot only needs an output directory; a config is optional.
      std::string out_dir = g.out_dir;
      if (out_dir.empty() && !g.config_path.empty()) {
        out_dir = ExperimentConfig::load_file(g.config_path).out_dir;
      }
      if (out_dir.empty()) throw ConfigError("plot: pass --out-dir or --config");
      plot_from_results(out_dir);
      std::cout << "plots written under " << out_dir << "/plots\n";
      return 0;
    }

    ExperimentConfig cfg = resolve_config(g);

    if (cmd_train->parsed()) {
      train_method(cfg, cfg.method);
      std::cout << "checkpoint: " << checkpoint_path(cfg, cfg.method) << "\n";
      return 0;
    }

    if (cmd_eval->parsed()) {
      const double load = eval_load >= 0 ? eval_load : (cfg.loads.empty() ? 0.8 : cfg.loads.front());
      if (load < 0 || load > 1.2) throw ConfigError("evaluate: load must be in [0, 1.2]");
      auto policy = make_decision_policy(cfg, cfg.method);
      for (unsigned long seed : cfg.seeds) {
        const EvalRun run = evaluate_cell(cfg, *policy, load, seed);
        write_eval_outputs(cfg, cfg.method, load, seed, run);
        std::cout << cfg.method << " load=" << load << " seed=" << seed
                  << " satisfaction=" << run.satisfaction_rate
                  << " throughput_bps=" << run.mean_throughput_bps << "\n";
      }
      return 0;
    }

    if (cmd_sweep->parsed()) {
      const SweepResult result = load_sweep(cfg);
      write_sweep_outputs(result, cfg.out_dir);
      if (result.methods.empty()) {
        std::cerr << "sweep-load: every method was skipped\n";
        return 2;
      }
      for (const auto& method : result.methods) {
        std::cout << method << ":";
        for (const auto& p : result.curves.at(method)) {
          std::cout << " " << p.load << "->" << p.mean;
        }
        std::cout << "\n";
      }
      return 0;
    }

    if (cmd_trace->parsed()) {
      const TraceResult result = throughput_trace(cfg);
      write_trace_outputs(result, cfg.out_dir);
      if (result.methods.empty()) {
        std::cerr << "trace: every method was skipped\n";
        return 2;
      }
      std::cout << "trace written for " << result.methods.size() << " methods ("
                << cfg.out_dir << "/results/trace.jsonl)\n";
      return 0;
    }

    if (cmd_util->parsed()) {
      const UtilizationResult result = utilization_run(cfg, cfg.method);
      write_utilization_outputs(result, cfg.out_dir);
      std::cout << utilization_table(result.rows);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
