#include "slicesim/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace slicesim {

ServiceClass service_class_from_string(const std::string& s) {
  if (s == "eMBB" || s == "embb") return ServiceClass::eMBB;
  if (s == "URLLC" || s == "urllc") return ServiceClass::URLLC;
  if (s == "mMTC" || s == "mmtc") return ServiceClass::mMTC;
  throw ConfigError("unknown service class: " + s);
}

std::string to_string(ServiceClass c) {
  switch (c) {
    case ServiceClass::eMBB: return "eMBB";
    case ServiceClass::URLLC: return "URLLC";
    case ServiceClass::mMTC: return "mMTC";
  }
  return "eMBB";
}

void SliceSpec::validate() const {
  if (!(delay_bound > 0)) throw ConfigError("slice " + id + ": delay_bound must be > 0");
  if (min_throughput < 0) throw ConfigError("slice " + id + ": min_throughput must be >= 0");
  if (reliability_target < 0 || reliability_target > 1) {
    throw ConfigError("slice " + id + ": reliability_target must be in [0,1]");
  }
  if (priority < 0) throw ConfigError("slice " + id + ": priority must be >= 0");
}

void UserSession::validate() const {
  if (arrival_rate < 0) throw ConfigError("user " + id + ": arrival_rate must be >= 0");
  if (!(packet_size > 0)) throw ConfigError("user " + id + ": packet_size must be > 0");
  if (!(compute_demand > 0)) throw ConfigError("user " + id + ": compute_demand must be > 0");
  if (wireless_rate < 0) throw ConfigError("user " + id + ": wireless_rate must be >= 0");
}

void ResourcePool::validate() const {
  for (int d = 0; d < kNumDomains; ++d) {
    if (!(capacity[d] > 0)) {
      throw ConfigError(std::string("pool: ") + domain_name(d) + " capacity must be > 0");
    }
  }
}

AllocationDecision AllocationDecision::zeros(int num_slices, int num_users) {
  AllocationDecision d;
  d.admissions = Eigen::VectorXi::Zero(num_slices);
  d.slice_budgets = Eigen::MatrixXd::Zero(num_slices, kNumDomains);
  d.user_allocations = Eigen::MatrixXd::Zero(num_users, kNumDomains);
  return d;
}

void Scenario::finalize() {
  if (slices.empty()) throw ConfigError("scenario needs at least one slice");
  if (num_cells < 1) throw ConfigError("scenario needs at least one cell");
  if (horizon < 1) throw ConfigError("scenario horizon must be >= 1");
  if (!(dt > 0)) throw ConfigError("scenario dt must be > 0");
  if (!(epsilon > 0)) throw ConfigError("scenario epsilon must be > 0");
  if (!(radio_unit_rate > 0)) throw ConfigError("scenario radio_unit_rate must be > 0");
  pool.validate();
  for (const auto& s : slices) s.validate();

  if (constraint_bounds.size() == 0) {
    constraint_bounds = Eigen::VectorXd(kNumConstraints);
    constraint_bounds << 0.05, 0.05, 0.02;
  }
  if (constraint_bounds.size() != kNumConstraints) {
    throw ConfigError("constraint bounds must have " + std::to_string(kNumConstraints) + " entries");
  }

  slice_users.assign(slices.size(), {});
  for (int u = 0; u < num_users(); ++u) {
    auto& user = users[u];
    user.validate();
    if (user.slice < 0 || user.slice >= num_slices()) {
      throw ConfigError("user " + user.id + ": unresolved slice index");
    }
    if (user.cell < 0 || user.cell >= num_cells) {
      throw ConfigError("user " + user.id + ": cell out of range");
    }
    slice_users[user.slice].push_back(u);
  }
}

int Scenario::slice_index(const std::string& id) const {
  for (int s = 0; s < num_slices(); ++s) {
    if (slices[s].id == id) return s;
  }
  throw InputError("unknown slice: " + id);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write file: " + path);
  out << contents;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

Scenario Scenario::from_json(const json& j) {
  Scenario sc;
  sc.name = get_or<std::string>(j, "name", "scenario");
  sc.dt = get_or<double>(j, "dt", 1.0);
  sc.epsilon = get_or<double>(j, "epsilon", 1e-6);
  sc.radio_unit_rate = get_or<double>(j, "radio_unit_rate", 1.0);
  sc.horizon = get_or<int>(j, "horizon", 200);
  sc.seed = get_or<unsigned long>(j, "seed", 1);
  sc.num_cells = get_or<int>(j, "num_cells", 1);

  if (!j.contains("pool")) throw ConfigError("scenario: missing 'pool'");
  const auto& p = j.at("pool");
  sc.pool.capacity << get_or<double>(p, "radio", 0.0), get_or<double>(p, "bandwidth", 0.0),
      get_or<double>(p, "compute", 0.0);

  if (j.contains("constraints")) {
    auto bounds = get_or<std::vector<double>>(j.at("constraints"), "bounds", {});
    if (!bounds.empty()) {
      sc.constraint_bounds = Eigen::Map<Eigen::VectorXd>(bounds.data(), bounds.size());
    }
  }

  if (!j.contains("slices")) throw ConfigError("scenario: missing 'slices'");
  for (const auto& sj : j.at("slices")) {
    SliceSpec spec;
    spec.id = get_or<std::string>(sj, "id", "slice" + std::to_string(sc.slices.size()));
    spec.service_class = service_class_from_string(get_or<std::string>(sj, "service_class", "eMBB"));
    spec.delay_bound = get_or<double>(sj, "delay_bound", 0.1);
    spec.min_throughput = get_or<double>(sj, "min_throughput", 0.0);
    spec.reliability_target = get_or<double>(sj, "reliability_target", 0.9);
    spec.priority = get_or<double>(sj, "priority", 1.0);
    const int slice_idx = static_cast<int>(sc.slices.size());
    sc.slices.push_back(spec);

    for (const auto& uj : sj.value("users", json::array())) {
      UserSession u;
      u.id = get_or<std::string>(uj, "id", spec.id + "-" + std::to_string(sc.users.size()));
      u.slice = slice_idx;
      u.cell = get_or<int>(uj, "cell", 0);
      u.arrival_rate = get_or<double>(uj, "arrival_rate", 0.0);
      u.packet_size = get_or<double>(uj, "packet_size", 1.0);
      u.compute_demand = get_or<double>(uj, "compute_demand", 1.0);
      u.wireless_rate = get_or<double>(uj, "wireless_rate", 0.0);
      sc.users.push_back(u);
    }
  }

  sc.finalize();
  return sc;
}

Scenario Scenario::load_file(const std::string& path) {
  return from_json(load_json_file(path));
}

json Scenario::to_json() const {
  json j;
  j["name"] = name;
  j["dt"] = dt;
  j["epsilon"] = epsilon;
  j["radio_unit_rate"] = radio_unit_rate;
  j["horizon"] = horizon;
  j["seed"] = seed;
  j["num_cells"] = num_cells;
  j["pool"] = {{"radio", pool.capacity[0]},
               {"bandwidth", pool.capacity[1]},
               {"compute", pool.capacity[2]}};
  j["constraints"] = {{"bounds", std::vector<double>(constraint_bounds.data(),
                                                     constraint_bounds.data() + constraint_bounds.size())}};
  j["slices"] = json::array();
  for (int s = 0; s < num_slices(); ++s) {
    const auto& spec = slices[s];
    json sj = {{"id", spec.id},
               {"service_class", to_string(spec.service_class)},
               {"delay_bound", spec.delay_bound},
               {"min_throughput", spec.min_throughput},
               {"reliability_target", spec.reliability_target},
               {"priority", spec.priority}};
    sj["users"] = json::array();
    for (int u : slice_users[s]) {
      const auto& user = users[u];
      sj["users"].push_back({{"id", user.id},
                             {"cell", user.cell},
                             {"arrival_rate", user.arrival_rate},
                             {"packet_size", user.packet_size},
                             {"compute_demand", user.compute_demand},
                             {"wireless_rate", user.wireless_rate}});
    }
    j["slices"].push_back(sj);
  }
  return j;
}

void TrainConfig::validate() const {
  if (!(discount > 0 && discount <= 1)) throw ConfigError("train: discount must be in (0,1]");
  if (gae_lambda < 0 || gae_lambda > 1) throw ConfigError("train: gae_lambda must be in [0,1]");
  if (!(clip > 0 && clip < 1)) throw ConfigError("train: clip must be in (0,1)");
  if (epochs < 1 || minibatch < 1 || rollout < 1) throw ConfigError("train: epochs/minibatch/rollout must be >= 1");
  // Zero net learning rates are allowed (no-op updates, useful as a
  // diagnostic); the dual step must stay positive.
  if (lr_policy < 0 || lr_value < 0 || !(dual_eta > 0)) {
    throw ConfigError("train: learning rates must be >= 0 and dual_eta > 0");
  }
  if (total_steps < 1) throw ConfigError("train: total_steps must be >= 1");
  if (upper_period < 1) throw ConfigError("train: upper_period must be >= 1");
  if (kappa < 0) throw ConfigError("train: kappa must be >= 0");
  if (history_window < 1) throw ConfigError("train: history_window must be >= 1");
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.discount = get_or<double>(j, "discount", c.discount);
  c.gae_lambda = get_or<double>(j, "gae_lambda", c.gae_lambda);
  c.clip = get_or<double>(j, "clip", c.clip);
  c.epochs = get_or<int>(j, "epochs", c.epochs);
  c.minibatch = get_or<int>(j, "minibatch", c.minibatch);
  c.rollout = get_or<int>(j, "rollout", c.rollout);
  c.total_steps = get_or<long>(j, "total_steps", c.total_steps);
  c.lr_policy = get_or<double>(j, "lr_policy", c.lr_policy);
  c.lr_value = get_or<double>(j, "lr_value", c.lr_value);
  c.dual_eta = get_or<double>(j, "dual_eta", c.dual_eta);
  c.entropy_coef = get_or<double>(j, "entropy_coef", c.entropy_coef);
  c.value_coef = get_or<double>(j, "value_coef", c.value_coef);
  c.cost_value_coef = get_or<double>(j, "cost_value_coef", c.cost_value_coef);
  c.seed = get_or<unsigned long>(j, "seed", c.seed);
  c.upper_period = get_or<int>(j, "upper_period", c.upper_period);
  c.kappa = get_or<double>(j, "kappa", c.kappa);
  c.use_shaping = get_or<bool>(j, "use_shaping", c.use_shaping);
  c.use_duals = get_or<bool>(j, "use_duals", c.use_duals);
  c.use_adaptive_weights = get_or<bool>(j, "use_adaptive_weights", c.use_adaptive_weights);
  c.alternate_levels = get_or<bool>(j, "alternate_levels", c.alternate_levels);
  c.embed_dim = get_or<int>(j, "embed_dim", c.embed_dim);
  c.gat_heads = get_or<int>(j, "gat_heads", c.gat_heads);
  c.lstm_hidden = get_or<int>(j, "lstm_hidden", c.lstm_hidden);
  c.history_window = get_or<int>(j, "history_window", c.history_window);
  c.hidden_dim = get_or<int>(j, "hidden_dim", c.hidden_dim);
  c.train_loads = get_or<std::vector<double>>(j, "train_loads", c.train_loads);
  c.train_pattern = get_or<std::string>(j, "train_pattern", c.train_pattern);
  c.divergence_guard = get_or<double>(j, "divergence_guard", c.divergence_guard);
  c.validate();
  return c;
}

json TrainConfig::to_json() const {
  return json{{"discount", discount},
              {"gae_lambda", gae_lambda},
              {"clip", clip},
              {"epochs", epochs},
              {"minibatch", minibatch},
              {"rollout", rollout},
              {"total_steps", total_steps},
              {"lr_policy", lr_policy},
              {"lr_value", lr_value},
              {"dual_eta", dual_eta},
              {"entropy_coef", entropy_coef},
              {"value_coef", value_coef},
              {"cost_value_coef", cost_value_coef},
              {"seed", seed},
              {"upper_period", upper_period},
              {"kappa", kappa},
              {"use_shaping", use_shaping},
              {"use_duals", use_duals},
              {"use_adaptive_weights", use_adaptive_weights},
              {"alternate_levels", alternate_levels},
              {"embed_dim", embed_dim},
              {"gat_heads", gat_heads},
              {"lstm_hidden", lstm_hidden},
              {"history_window", history_window},
              {"hidden_dim", hidden_dim},
              {"train_loads", train_loads},
              {"train_pattern", train_pattern},
              {"divergence_guard", divergence_guard}};
}

TrafficConfig TrafficConfig::from_json(const json& j) {
  TrafficConfig t;
  t.source = get_or<std::string>(j, "source", t.source);
  t.pattern = get_or<std::string>(j, "pattern", t.pattern);
  t.cdr_path = get_or<std::string>(j, "cdr_path", t.cdr_path);
  t.cdr_cells = get_or<std::vector<long>>(j, "cdr_cells", t.cdr_cells);
  t.time_begin_ms = get_or<long>(j, "time_begin_ms", t.time_begin_ms);
  t.time_end_ms = get_or<long>(j, "time_end_ms", t.time_end_ms);
  if (j.contains("slice_mapping")) t.slice_mapping = j.at("slice_mapping");
  t.boost_factor = get_or<double>(j, "boost_factor", t.boost_factor);
  t.boost_start = get_or<int>(j, "boost_start", t.boost_start);
  t.boost_len = get_or<int>(j, "boost_len", t.boost_len);
  if (t.source != "synthetic" && t.source != "cdr") {
    throw ConfigError("traffic source must be 'synthetic' or 'cdr'");
  }
  return t;
}

json TrafficConfig::to_json() const {
  json j{{"source", source},       {"pattern", pattern},
         {"cdr_path", cdr_path},   {"cdr_cells", cdr_cells},
         {"time_begin_ms", time_begin_ms}, {"time_end_ms", time_end_ms},
         {"boost_factor", boost_factor},   {"boost_start", boost_start},
         {"boost_len", boost_len}};
  if (!slice_mapping.is_null()) j["slice_mapping"] = slice_mapping;
  return j;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("experiment: needs at least one seed");
  for (double l : loads) {
    if (l < 0 || l > 1.2) throw ConfigError("experiment: load levels must be in [0, 1.2]");
  }
  if (eval_episodes < 1) throw ConfigError("experiment: eval_episodes must be >= 1");
  if (utilization_buckets < 1) throw ConfigError("experiment: utilization_buckets must be >= 1");
  if (!static_shares.empty()) {
    if (static_shares.size() != static_cast<size_t>(scenario.num_slices())) {
      throw ConfigError("experiment: static_shares must have one entry per slice");
    }
  }
  train.validate();
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& base_dir) {
  ExperimentConfig c;
  if (j.contains("scenario") && j.at("scenario").is_object()) {
    c.scenario = Scenario::from_json(j.at("scenario"));
  } else if (j.contains("scenario")) {
    std::filesystem::path p = j.at("scenario").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    c.scenario_path = p.string();
    c.scenario = Scenario::load_file(c.scenario_path);
  } else {
    throw ConfigError("experiment: missing 'scenario'");
  }
  c.method = get_or<std::string>(j, "method", c.method);
  if (j.contains("traffic")) c.traffic = TrafficConfig::from_json(j.at("traffic"));
  c.loads = get_or<std::vector<double>>(j, "loads", c.loads);
  c.seeds = get_or<std::vector<unsigned long>>(j, "seeds", c.seeds);
  c.horizon = get_or<int>(j, "horizon", c.horizon);
  c.eval_episodes = get_or<int>(j, "eval_episodes", c.eval_episodes);
  c.out_dir = get_or<std::string>(j, "out_dir", c.out_dir);
  if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
  c.sweep_methods = get_or<std::vector<std::string>>(j, "sweep_methods", c.sweep_methods);
  c.static_shares = get_or<std::vector<double>>(j, "static_shares", c.static_shares);
  c.utilization_buckets = get_or<int>(j, "utilization_buckets", c.utilization_buckets);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::filesystem::path p(path);
  return from_json(load_json_file(path), p.has_parent_path() ? p.parent_path().string() : "");
}

json ExperimentConfig::to_json() const {
  json j;
  j["scenario"] = scenario_path.empty() ? json(scenario.to_json()) : json(scenario_path);
  j["method"] = method;
  j["traffic"] = traffic.to_json();
  j["loads"] = loads;
  j["seeds"] = seeds;
  j["horizon"] = horizon;
  j["eval_episodes"] = eval_episodes;
  j["out_dir"] = out_dir;
  j["train"] = train.to_json();
  j["sweep_methods"] = sweep_methods;
  j["static_shares"] = static_shares;
  j["utilization_buckets"] = utilization_buckets;
  return j;
}

}  // namespace slicesim
