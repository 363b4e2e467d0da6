#include "slicesim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "slicesim/reward.hpp"
#include "slicesim/traffic.hpp"

namespace slicesim {

Eigen::VectorXd priority_proportional_shares(const Scenario& scenario) {
  const int S = scenario.num_slices();
  Eigen::VectorXd shares(S);
  for (int s = 0; s < S; ++s) shares[s] = scenario.slices[s].priority;
  const double total = shares.sum();
  if (total <= 0) return Eigen::VectorXd::Constant(S, 1.0 / S);
  return shares / total;
}

AllocationDecision static_allocate(const Eigen::VectorXd& shares, const Scenario& scenario) {
  const int S = scenario.num_slices();
  if (shares.size() != S) throw ConfigError("static_allocate: one share per slice required");
  if (shares.minCoeff() < 0 || std::abs(shares.sum() - 1.0) > 1e-6) {
    throw ConfigError("static_allocate: shares must lie on the simplex");
  }

  AllocationDecision dec = AllocationDecision::zeros(S, scenario.num_users());
  dec.admissions.setOnes();
  for (int s = 0; s < S; ++s) {
    for (int d = 0; d < kNumDomains; ++d) {
      dec.slice_budgets(s, d) = shares[s] * scenario.pool.capacity[d];
    }
    const auto& users = scenario.slice_users[s];
    if (users.empty()) continue;
    for (int u : users) {
      for (int d = 0; d < kNumDomains; ++d) {
        dec.user_allocations(u, d) = dec.slice_budgets(s, d) / users.size();
      }
    }
  }
  return dec;
}

AllocationDecision greedy_allocate(const Scenario& scenario,
                                   const Eigen::VectorXd& load_multiplier,
                                   const Eigen::VectorXd& backlog) {
  const int S = scenario.num_slices();
  const int U = scenario.num_users();

  struct Entry {
    int user;
    double priority;
    double demand_rate;  // bits/s needed to clear traffic and hold the delay bound
  };
  std::vector<Entry> entries;
  entries.reserve(U);
  for (int u = 0; u < U; ++u) {
    const auto& user = scenario.users[u];
    const auto& spec = scenario.slices[user.slice];
    const double lambda =
        user.arrival_rate * load_multiplier[user.slice] + backlog[u] / scenario.dt;
    const double delay_headroom = 2.0 * kNumDomains * user.packet_size / spec.delay_bound;
    const double rate = std::max(spec.min_throughput, lambda + delay_headroom);
    entries.push_back({u, spec.priority, rate});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.priority != b.priority) return a.priority > b.priority;
    if (a.demand_rate != b.demand_rate) return a.demand_rate > b.demand_rate;
    return a.user < b.user;  // documented tie-break
  });

  AllocationDecision dec = AllocationDecision::zeros(S, U);
  dec.admissions.setOnes();
  Eigen::Vector3d remaining = scenario.pool.capacity;
  for (const auto& e : entries) {
    const auto& user = scenario.users[e.user];
    Eigen::Vector3d want;
    want[0] = std::min(e.demand_rate, user.wireless_rate) / scenario.radio_unit_rate;
    want[1] = e.demand_rate;
    want[2] = e.demand_rate * user.compute_demand;
    for (int d = 0; d < kNumDomains; ++d) {
      const double grant = std::min(want[d], remaining[d]);
      dec.user_allocations(e.user, d) = grant;
      remaining[d] -= grant;
    }
  }
  for (int s = 0; s < S; ++s) {
    for (int u : scenario.slice_users[s]) {
      dec.slice_budgets.row(s) += dec.user_allocations.row(u);
    }
  }
  return dec;
}

// ---- DQN -----------------------------------------------------------------------

namespace {

// All share vectors with entries on a grid of `levels` points summing to 1.
void enumerate_templates(int slices, int units, Eigen::VectorXd& current, int at,
                         std::vector<Eigen::VectorXd>& out, int denom) {
  if (at == slices - 1) {
    current[at] = static_cast<double>(units) / denom;
    out.push_back(current);
    return;
  }
  for (int take = 0; take <= units; ++take) {
    current[at] = static_cast<double>(take) / denom;
    enumerate_templates(slices, units - take, current, at + 1, out, denom);
  }
}

std::vector<Eigen::VectorXd> make_templates(int slices, int levels) {
  int units = levels - 1;
  std::vector<Eigen::VectorXd> out;
  while (true) {
    out.clear();
    Eigen::VectorXd cur(slices);
    enumerate_templates(slices, units, cur, 0, out, units);
    if (static_cast<int>(out.size()) <= 300 || units <= 1) return out;
    units /= 2;  // keep the joint head size desk-scale for larger slice counts
  }
}

}  // namespace

DqnConfig DqnConfig::from_json(const json& j) {
  DqnConfig c;
  if (j.contains("hidden")) c.hidden = j.at("hidden").get<int>();
  if (j.contains("lr")) c.lr = j.at("lr").get<double>();
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
  if (j.contains("replay_capacity")) c.replay_capacity = j.at("replay_capacity").get<int>();
  if (j.contains("batch")) c.batch = j.at("batch").get<int>();
  if (j.contains("target_sync")) c.target_sync = j.at("target_sync").get<int>();
  if (j.contains("train_every")) c.train_every = j.at("train_every").get<int>();
  if (j.contains("warmup")) c.warmup = j.at("warmup").get<long>();
  if (j.contains("eps_start")) c.eps_start = j.at("eps_start").get<double>();
  if (j.contains("eps_end")) c.eps_end = j.at("eps_end").get<double>();
  if (j.contains("eps_anneal")) c.eps_anneal = j.at("eps_anneal").get<long>();
  if (j.contains("q_guard")) c.q_guard = j.at("q_guard").get<double>();
  if (j.contains("levels")) c.levels = j.at("levels").get<int>();
  if (c.eps_start < 0 || c.eps_start > 1 || c.eps_end < 0 || c.eps_end > 1) {
    throw ConfigError("dqn: epsilon must stay in [0,1]");
  }
  return c;
}

json DqnConfig::to_json() const {
  return json{{"hidden", hidden},
              {"lr", lr},
              {"gamma", gamma},
              {"replay_capacity", replay_capacity},
              {"batch", batch},
              {"target_sync", target_sync},
              {"train_every", train_every},
              {"warmup", warmup},
              {"eps_start", eps_start},
              {"eps_end", eps_end},
              {"eps_anneal", eps_anneal},
              {"q_guard", q_guard},
              {"levels", levels}};
}

DqnAgent::DqnAgent(const Scenario& scenario, DqnConfig cfg, unsigned long seed)
    : scenario_(scenario),
      cfg_(cfg),
      flat_dim_(flat_observation_dim(scenario)),
      templates_(make_templates(scenario.num_slices(), cfg.levels)),
      rng_(seed) {
  Rng init(seed);
  const int n = num_templates();
  h1_ = nn::Dense("q.h1", flat_dim_, cfg_.hidden, init);
  h2_ = nn::Dense("q.h2", cfg_.hidden, cfg_.hidden, init);
  t_h1_ = nn::Dense("qt.h1", flat_dim_, cfg_.hidden, init);
  t_h2_ = nn::Dense("qt.h2", cfg_.hidden, cfg_.hidden, init);
  for (int d = 0; d < kNumDomains; ++d) {
    heads_.emplace_back("q.head" + std::to_string(d), cfg_.hidden, n, init);
    t_heads_.emplace_back("qt.head" + std::to_string(d), cfg_.hidden, n, init);
  }
  adam_ = std::make_unique<nn::Adam>(cfg_.lr);
  sync_target();
}

std::vector<ad::Param*> DqnAgent::online_params() {
  std::vector<ad::Param*> out;
  h1_.collect(out);
  h2_.collect(out);
  for (auto& head : heads_) head.collect(out);
  return out;
}

void DqnAgent::sync_target() {
  t_h1_.W.value = h1_.W.value;
  t_h1_.b.value = h1_.b.value;
  t_h2_.W.value = h2_.W.value;
  t_h2_.b.value = h2_.b.value;
  for (int d = 0; d < kNumDomains; ++d) {
    t_heads_[d].W.value = heads_[d].W.value;
    t_heads_[d].b.value = heads_[d].b.value;
  }
}

DqnAgent::QValues DqnAgent::q_forward(const Eigen::MatrixXd& flat_batch, bool use_target) {
  ad::Tape tape;
  nn::Dense& l1 = use_target ? t_h1_ : h1_;
  nn::Dense& l2 = use_target ? t_h2_ : h2_;
  auto& heads = use_target ? t_heads_ : heads_;
  ad::Var h = ad::relu(l2.apply(tape, ad::relu(l1.apply(tape, tape.constant(flat_batch)))));
  QValues q;
  for (int d = 0; d < kNumDomains; ++d) q.per_domain.push_back(heads[d].apply(tape, h).val());
  return q;
}

std::array<int, kNumDomains> DqnAgent::greedy_action(const Eigen::VectorXd& flat_obs) {
  const QValues q = q_forward(flat_obs.transpose(), false);
  std::array<int, kNumDomains> action{};
  for (int d = 0; d < kNumDomains; ++d) {
    Eigen::Index best;
    q.per_domain[d].row(0).maxCoeff(&best);
    action[d] = static_cast<int>(best);
  }
  return action;
}

std::array<int, kNumDomains> DqnAgent::act_epsilon(const Eigen::VectorXd& flat_obs, double eps,
                                                   Rng& rng) {
  std::array<int, kNumDomains> action{};
  bool need_greedy = false;
  std::array<bool, kNumDomains> exploratory{};
  for (int d = 0; d < kNumDomains; ++d) {
    exploratory[d] = rng.uniform() < eps;
    need_greedy = need_greedy || !exploratory[d];
  }
  std::array<int, kNumDomains> greedy{};
  if (need_greedy) greedy = greedy_action(flat_obs);
  for (int d = 0; d < kNumDomains; ++d) {
    action[d] = exploratory[d] ? rng.uniform_int(num_templates()) : greedy[d];
  }
  return action;
}

AllocationDecision DqnAgent::decision_from(const std::array<int, kNumDomains>& action) const {
  const int S = scenario_.num_slices();
  AllocationDecision dec = AllocationDecision::zeros(S, scenario_.num_users());
  dec.admissions.setOnes();
  for (int d = 0; d < kNumDomains; ++d) {
    const Eigen::VectorXd& shares = templates_[action[d]];
    for (int s = 0; s < S; ++s) {
      dec.slice_budgets(s, d) = shares[s] * scenario_.pool.capacity[d];
      const auto& users = scenario_.slice_users[s];
      for (int u : users) dec.user_allocations(u, d) = dec.slice_budgets(s, d) / users.size();
    }
  }
  return dec;
}

double DqnAgent::epsilon_at(long step) const {
  if (step >= cfg_.eps_anneal) return cfg_.eps_end;
  const double frac = static_cast<double>(step) / cfg_.eps_anneal;
  return cfg_.eps_start + frac * (cfg_.eps_end - cfg_.eps_start);
}

std::vector<int> DqnAgent::sample_replay_indices(int batch, Rng& rng) const {
  std::vector<int> idx(batch);
  for (int i = 0; i < batch; ++i) idx[i] = rng.uniform_int(static_cast<int>(replay_.size()));
  return idx;
}

void DqnAgent::learn_batch(Rng& rng) {
  const std::vector<int> idx = sample_replay_indices(cfg_.batch, rng);
  const int B = cfg_.batch;
  Eigen::MatrixXd X(B, flat_dim_), Xn(B, flat_dim_);
  for (int i = 0; i < B; ++i) {
    X.row(i) = replay_[idx[i]].obs;
    Xn.row(i) = replay_[idx[i]].next_obs;
  }

  const QValues q_next = q_forward(Xn, true);
  Eigen::MatrixXd targets(B, kNumDomains);
  for (int i = 0; i < B; ++i) {
    const auto& tr = replay_[idx[i]];
    for (int d = 0; d < kNumDomains; ++d) {
      const double best_next = q_next.per_domain[d].row(i).maxCoeff();
      targets(i, d) = tr.reward + (tr.done ? 0.0 : cfg_.gamma * best_next);
    }
  }

  ad::Tape tape;
  ad::Var h = ad::relu(h2_.apply(tape, ad::relu(h1_.apply(tape, tape.constant(X)))));
  ad::Var loss = tape.scalar(0.0);
  for (int d = 0; d < kNumDomains; ++d) {
    ad::Var q = heads_[d].apply(tape, h);
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(B, num_templates());
    for (int i = 0; i < B; ++i) onehot(i, replay_[idx[i]].action[d]) = 1.0;
    ad::Var q_sel = ad::row_sums(ad::cmul(q, onehot));
    ad::Var err = ad::sub(q_sel, tape.constant(targets.col(d)));
    loss = ad::add(loss, ad::mean(ad::square(err)));

    const double q_extreme = q.val().cwiseAbs().maxCoeff();
    if (q_extreme > cfg_.q_guard) {
      throw std::runtime_error("dqn diverged: |Q| reached " + std::to_string(q_extreme));
    }
  }

  auto params = online_params();
  for (ad::Param* p : params) p->zero_grad();
  tape.backward(loss);
  adam_->step(params);
}

std::vector<json> DqnAgent::train(const TrafficConfig& traffic, const std::vector<double>& loads,
                                  const std::string& pattern, long total_steps,
                                  const std::string& metrics_path) {
  std::ofstream metrics_out;
  if (!metrics_path.empty()) {
    metrics_out.open(metrics_path, std::ios::app);
    if (!metrics_out) throw InputError("cannot open metrics log: " + metrics_path);
  }

  auto episode_trace = [&](double load) {
    TrafficConfig tc = traffic;
    tc.pattern = pattern;
    tc.boost_start = -1;
    return make_trace(tc, scenario_, load, scenario_.horizon, rng_.next());
  };
  auto pick_load = [&]() { return loads[rng_.uniform_int(static_cast<int>(loads.size()))]; };

  const Eigen::VectorXd fixed_weights =
      Eigen::VectorXd::Constant(kNumObjectives, 1.0 / kNumObjectives);
  std::vector<json> history;
  SliceEnv env(scenario_, episode_trace(pick_load()), 8);
  Eigen::VectorXd flat = flatten_observation(build_observation(env));

  long episode = 0;
  double ep_reward = 0, ep_satisfaction = 0;
  int ep_len = 0;

  while (steps_done_ < total_steps) {
    const double eps = epsilon_at(steps_done_);
    const auto action = act_epsilon(flat, eps, rng_);
    StepOutcome outcome = env.step(decision_from(action));
    const ObjectiveVector objv = objective_vector(outcome, scenario_);
    const double reward = base_reward(objv.u, fixed_weights);
    const bool done = env.done();
    const Eigen::VectorXd next_flat = flatten_observation(build_observation(env));

    DqnTransition tr{flat, next_flat, action, reward, done};
    if (static_cast<int>(replay_.size()) < cfg_.replay_capacity) {
      replay_.push_back(std::move(tr));
    } else {
      replay_[replay_next_] = std::move(tr);
      replay_next_ = (replay_next_ + 1) % cfg_.replay_capacity;
    }

    int satisfied = 0;
    for (const auto& rec : outcome.records) satisfied += rec.satisfied() ? 1 : 0;
    ep_reward += reward;
    ep_satisfaction += outcome.records.empty()
                           ? 1.0
                           : static_cast<double>(satisfied) / outcome.records.size();
    ++ep_len;
    ++steps_done_;
    flat = next_flat;

    if (steps_done_ > cfg_.warmup && steps_done_ % cfg_.train_every == 0 &&
        static_cast<int>(replay_.size()) >= cfg_.batch) {
      learn_batch(rng_);
    }
    if (steps_done_ % cfg_.target_sync == 0) sync_target();

    if (done) {
      ++episode;
      json line{{"episode", episode},
                {"env_steps", steps_done_},
                {"reward_mean", ep_reward / ep_len},
                {"qos_satisfaction", ep_satisfaction / ep_len},
                {"epsilon", eps}};
      if (metrics_out.is_open()) metrics_out << line.dump() << "\n" << std::flush;
      history.push_back(std::move(line));
      ep_reward = ep_satisfaction = 0;
      ep_len = 0;
      env.set_trace(episode_trace(pick_load()));
      env.reset();
      flat = flatten_observation(build_observation(env));
    }
  }
  return history;
}

json DqnAgent::hyperparams() const {
  return json{{"num_slices", scenario_.num_slices()},
              {"num_cells", scenario_.num_cells},
              {"num_users", scenario_.num_users()},
              {"flat_dim", flat_dim_},
              {"hidden", cfg_.hidden},
              {"levels", cfg_.levels},
              {"num_templates", num_templates()}};
}

void DqnAgent::save(const std::string& path) const {
  std::vector<ad::Param*> params;
  auto* self = const_cast<DqnAgent*>(this);
  params = self->online_params();

  json payload{{"format", "slicesim-dqn"},
               {"version", 1},
               {"hyperparams", hyperparams()},
               {"config", cfg_.to_json()},
               {"scenario", scenario_.to_json()},
               {"steps_done", steps_done_},
               {"rng", rng_.serialize()},
               {"params", nn::params_to_json(params)}};
  json file = payload;
  file["integrity"] = to_hex(fnv1a64(payload.dump()));
  write_text_file(path, file.dump());
}

DqnAgent DqnAgent::load(const std::string& path, const Scenario& scenario) {
  json file = load_json_file(path);
  if (file.value("format", "") != "slicesim-dqn") throw InputError(path + ": not a DQN checkpoint");
  if (file.value("version", -1) != 1) throw InputError(path + ": unsupported DQN checkpoint version");
  const std::string stamp = file.value("integrity", "");
  json payload = file;
  payload.erase("integrity");
  if (to_hex(fnv1a64(payload.dump())) != stamp) {
    throw InputError(path + ": integrity check failed");
  }

  DqnConfig cfg = DqnConfig::from_json(payload.at("config"));
  DqnAgent agent(Scenario::from_json(payload.at("scenario")), cfg, 1);
  const json want = agent.hyperparams();
  if (payload.at("hyperparams") != want) {
    throw InputError(path + ": DQN hyperparameters mismatch");
  }
  const PolicyDims stored = PolicyDims::of(agent.scenario_);
  const PolicyDims current = PolicyDims::of(scenario);
  if (!(stored == current)) {
    throw InputError(path + ": checkpoint scenario dimensions do not match");
  }
  nn::params_from_json(payload.at("params"), agent.online_params());
  agent.sync_target();
  agent.steps_done_ = payload.at("steps_done").get<long>();
  agent.rng_.deserialize(payload.at("rng").get<std::string>());
  return agent;
}

}  // namespace slicesim
