#include "slicesim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "slicesim/traffic.hpp"

namespace slicesim {

std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_gae(
    const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
    const std::vector<char>& dones, double bootstrap_value, double discount,
    double gae_lambda) {
  const int T = static_cast<int>(rewards.size());
  if (values.size() != T || static_cast<int>(dones.size()) != T) {
    throw InputError("compute_gae: rewards/values/dones lengths disagree");
  }
  Eigen::VectorXd advantages(T), returns(T);
  double next_advantage = 0.0;
  double next_value = bootstrap_value;
  for (int t = T - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + discount * next_value * not_done - values[t];
    next_advantage = delta + discount * gae_lambda * not_done * next_advantage;
    advantages[t] = next_advantage;
    returns[t] = advantages[t] + values[t];
    next_value = values[t];
  }
  return {advantages, returns};
}

double ppo_clip_loss(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return -std::min(ratio * advantage, clipped * advantage);
}

void RolloutBuffer::reset(int cap) {
  observations.clear();
  actions.clear();
  log_probs.clear();
  values.clear();
  base_rewards.clear();
  shaped_rewards.clear();
  penalized_rewards.clear();
  potentials.clear();
  satisfaction.clear();
  dones.clear();
  observations.reserve(cap);
  actions.reserve(cap);
  costs.setZero(cap, kNumConstraints);
  cost_values.setZero(cap, kNumConstraints);
  weights.setZero(cap, kNumObjectives);
  size = 0;
}

json IterationMetrics::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return json{{"iteration", iteration},
              {"env_steps", env_steps},
              {"reward_base", mean_reward_base},
              {"reward_shaped", mean_reward_shaped},
              {"reward_penalized", mean_reward_penalized},
              {"costs", vec(mean_costs)},
              {"lambda", vec(multipliers)},
              {"weights", vec(mean_weights)},
              {"qos_satisfaction", qos_satisfaction},
              {"policy_loss", policy_loss},
              {"value_loss", value_loss},
              {"entropy", entropy},
              {"ratio_gap", mean_abs_ratio_gap}};
}

Trainer::Trainer(Scenario scenario, TrainConfig cfg, TrafficConfig traffic, std::string method)
    : scenario_(std::move(scenario)),
      cfg_(cfg),
      traffic_(std::move(traffic)),
      method_(std::move(method)),
      rng_(cfg.seed) {
  cfg_.validate();
  if (method_ == "standard_ppo") {
    // The flat baseline isolates the hierarchical/spatio-temporal deltas:
    // fixed equal weights, no shaping, no Lagrangian pressure.
    cfg_.use_shaping = false;
    cfg_.use_duals = false;
    cfg_.use_adaptive_weights = false;
  } else if (method_ != "hm_ppo") {
    throw ConfigError("Trainer supports methods 'hm_ppo' and 'standard_ppo', got '" + method_ + "'");
  }
  policy_ = make_actor_critic(method_, scenario_, cfg_);
  adam_policy_ = std::make_unique<nn::Adam>(cfg_.lr_policy);
  adam_value_ = std::make_unique<nn::Adam>(cfg_.lr_value);
  constraints_ = ConstraintState::init(scenario_.constraint_bounds, cfg_.dual_eta);
}

Trainer::CollectResult Trainer::collect_rollout(RolloutBuffer& buf) {
  buf.reset(cfg_.rollout);

  auto pick_load = [&]() {
    return cfg_.train_loads[rng_.uniform_int(static_cast<int>(cfg_.train_loads.size()))];
  };
  auto episode_trace = [&](double load) {
    TrafficConfig tc = traffic_;
    tc.pattern = cfg_.train_pattern;
    tc.boost_start = -1;  // no evaluation-only boost windows during training
    return make_trace(tc, scenario_, load, scenario_.horizon, rng_.next());
  };

  SliceEnv env(scenario_, episode_trace(pick_load()), cfg_.history_window);
  std::optional<HierarchicalAction> held;
  int episode_step = 0;
  double phi = shaping_potential(env.state());
  const Eigen::VectorXd fixed_weights =
      Eigen::VectorXd::Constant(kNumObjectives, 1.0 / kNumObjectives);

  for (int t = 0; t < cfg_.rollout; ++t) {
    Observation obs = build_observation(env);
    const bool upper_step =
        policy_->hierarchical() ? (episode_step % cfg_.upper_period == 0) : true;
    ActSample sample =
        policy_->act(obs, ActionMode::Sample, rng_, upper_step, held ? &*held : nullptr);

    StepOutcome outcome = env.step(sample.decision);
    const ObjectiveVector objv = objective_vector(outcome, scenario_);
    const Eigen::VectorXd w =
        cfg_.use_adaptive_weights ? adaptive_weights(objv.v, cfg_.kappa) : fixed_weights;
    const double r_base = base_reward(objv.u, w);
    const double phi_next = shaping_potential(env.state());
    const double r_shaped =
        cfg_.use_shaping ? shaped_reward(r_base, phi, phi_next, cfg_.discount) : r_base;
    const double r_pen = cfg_.use_duals
                             ? penalized_reward(r_shaped, outcome.costs, constraints_.multipliers)
                             : r_shaped;

    int satisfied = 0;
    for (const auto& rec : outcome.records) satisfied += rec.satisfied() ? 1 : 0;

    buf.observations.push_back(std::move(obs));
    buf.actions.push_back(sample.action);
    buf.log_probs.push_back(sample.log_prob);
    buf.values.push_back(sample.value);
    buf.base_rewards.push_back(r_base);
    buf.shaped_rewards.push_back(r_shaped);
    buf.penalized_rewards.push_back(r_pen);
    buf.potentials.push_back(phi);
    buf.satisfaction.push_back(outcome.records.empty()
                                   ? 1.0
                                   : static_cast<double>(satisfied) / outcome.records.size());
    buf.costs.row(buf.size) = outcome.costs;
    buf.cost_values.row(buf.size) = sample.cost_values;
    buf.weights.row(buf.size) = w;
    buf.dones.push_back(env.done() ? 1 : 0);
    ++buf.size;

    held = sample.action;
    phi = phi_next;
    ++episode_step;
    ++env_steps_;

    if (env.done() && t + 1 < cfg_.rollout) {
      env.set_trace(episode_trace(pick_load()));
      env.reset();
      held.reset();
      episode_step = 0;
      phi = shaping_potential(env.state());
    }
  }

  CollectResult result;
  result.bootstrap_costs = Eigen::VectorXd::Zero(kNumConstraints);
  if (!buf.dones.back()) {
    const PolicyOutput next = policy_->forward(build_observation(env));
    result.bootstrap_value = next.value;
    result.bootstrap_costs = next.cost_values;
  }
  return result;
}

IterationMetrics Trainer::update(RolloutBuffer& buf, const CollectResult& boot) {
  const int T = buf.size;
  const Eigen::VectorXd rewards =
      Eigen::Map<const Eigen::VectorXd>(buf.penalized_rewards.data(), T);
  const Eigen::VectorXd values = Eigen::Map<const Eigen::VectorXd>(buf.values.data(), T);

  auto [advantages, returns] =
      compute_gae(rewards, values, buf.dones, boot.bootstrap_value, cfg_.discount, cfg_.gae_lambda);

  Eigen::MatrixXd cost_returns(T, kNumConstraints);
  for (int k = 0; k < kNumConstraints; ++k) {
    auto [ca, cr] = compute_gae(buf.costs.col(k).head(T), buf.cost_values.col(k).head(T),
                                buf.dones, boot.bootstrap_costs[k], cfg_.discount, cfg_.gae_lambda);
    cost_returns.col(k) = cr;
  }

  const double adv_mean = advantages.mean();
  const double adv_std =
      std::sqrt((advantages.array() - adv_mean).square().sum() / std::max(T, 1));
  const Eigen::VectorXd norm_adv = (advantages.array() - adv_mean) / (adv_std + 1e-8);

  const auto all_params = policy_->parameters();
  const auto value_params = policy_->value_parameters();
  std::unordered_set<ad::Param*> value_set(value_params.begin(), value_params.end());
  std::vector<ad::Param*> policy_params;
  for (ad::Param* p : all_params) {
    if (!value_set.count(p)) policy_params.push_back(p);
  }

  std::vector<int> order(T);
  std::iota(order.begin(), order.end(), 0);

  IterationMetrics m;
  double last_policy_loss = 0, last_value_loss = 0, last_entropy = 0, last_gap = 0;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    // Fisher-Yates with the trainer RNG keeps the whole run seed-determined.
    for (int i = T - 1; i > 0; --i) {
      std::swap(order[i], order[rng_.uniform_int(i + 1)]);
    }

    double epoch_policy = 0, epoch_value = 0, epoch_entropy = 0, epoch_gap = 0;
    int counted = 0;

    for (int start = 0; start < T; start += cfg_.minibatch) {
      const int end = std::min(T, start + cfg_.minibatch);
      const double inv_batch = 1.0 / (end - start);
      for (ad::Param* p : all_params) p->zero_grad();

      for (int j = start; j < end; ++j) {
        const int i = order[j];
        ad::Tape tape;
        ActionEval eval = policy_->evaluate(tape, buf.observations[i], buf.actions[i]);

        ad::Var ratio = ad::exp_(ad::add(eval.log_prob, -buf.log_probs[i]));
        ad::Var surr_raw = ad::scale(ratio, norm_adv[i]);
        ad::Var surr_clip = ad::scale(ad::clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip),
                                      norm_adv[i]);
        ad::Var policy_term = ad::neg(ad::min_(surr_raw, surr_clip));

        ad::Var value_err = ad::square(ad::add(eval.value, -returns[i]));
        Eigen::MatrixXd cr = cost_returns.row(i);
        ad::Var cost_err =
            ad::sum(ad::square(ad::sub(eval.cost_values, tape.constant(cr))));

        ad::Var loss = ad::add(policy_term, ad::scale(value_err, cfg_.value_coef));
        loss = ad::add(loss, ad::scale(cost_err, cfg_.cost_value_coef));
        loss = ad::add(loss, ad::scale(eval.entropy, -cfg_.entropy_coef));

        tape.backward(loss, inv_batch);

        epoch_policy += policy_term.scalar();
        epoch_value += value_err.scalar();
        epoch_entropy += eval.entropy.scalar();
        epoch_gap += std::abs(ratio.scalar() - 1.0);
        ++counted;
      }

      if (cfg_.alternate_levels) {
        const bool update_upper = iteration_ % 2 == 0;
        for (ad::Param* p : update_upper ? policy_->lower_parameters()
                                         : policy_->upper_parameters()) {
          p->zero_grad();
        }
      }
      adam_policy_->step(policy_params);
      adam_value_->step(value_params);
    }

    last_policy_loss = epoch_policy / counted;
    last_value_loss = epoch_value / counted;
    last_entropy = epoch_entropy / counted;
    last_gap = epoch_gap / counted;
    if (last_gap > cfg_.divergence_guard) {
      throw std::runtime_error(
          "trainer diverged: mean |ratio-1| = " + std::to_string(last_gap) + " after epoch " +
          std::to_string(epoch) + " of iteration " + std::to_string(iteration_) +
          " (guard " + std::to_string(cfg_.divergence_guard) + ")");
    }
  }

  const Eigen::VectorXd batch_costs = buf.costs.topRows(T).colwise().mean();
  if (cfg_.use_duals) {
    constraints_ = dual_update(constraints_, batch_costs);
  } else {
    constraints_.running_cost = batch_costs;
  }

  ++iteration_;
  m.iteration = iteration_;
  m.env_steps = env_steps_;
  m.mean_reward_base =
      Eigen::Map<const Eigen::VectorXd>(buf.base_rewards.data(), T).mean();
  m.mean_reward_shaped =
      Eigen::Map<const Eigen::VectorXd>(buf.shaped_rewards.data(), T).mean();
  m.mean_reward_penalized = rewards.mean();
  m.mean_costs = batch_costs;
  m.multipliers = constraints_.multipliers;
  m.mean_weights = buf.weights.topRows(T).colwise().mean();
  m.qos_satisfaction =
      Eigen::Map<const Eigen::VectorXd>(buf.satisfaction.data(), T).mean();
  m.policy_loss = last_policy_loss;
  m.value_loss = last_value_loss;
  m.entropy = last_entropy;
  m.mean_abs_ratio_gap = last_gap;
  return m;
}

std::vector<IterationMetrics> Trainer::train(const std::string& metrics_path) {
  const long target = cfg_.total_steps;
  std::vector<IterationMetrics> history;
  std::ofstream metrics_out;
  if (!metrics_path.empty()) {
    metrics_out.open(metrics_path, std::ios::app);
    if (!metrics_out) throw InputError("cannot open metrics log: " + metrics_path);
  }
  RolloutBuffer buffer;
  while (env_steps_ < target) {
    const CollectResult boot = collect_rollout(buffer);
    IterationMetrics m = update(buffer, boot);
    if (metrics_out.is_open()) metrics_out << m.to_json().dump() << "\n" << std::flush;
    history.push_back(std::move(m));
  }
  return history;
}

std::vector<IterationMetrics> Trainer::train_iterations(int iterations,
                                                        const std::string& metrics_path) {
  std::vector<IterationMetrics> history;
  std::ofstream metrics_out;
  if (!metrics_path.empty()) {
    metrics_out.open(metrics_path, std::ios::app);
    if (!metrics_out) throw InputError("cannot open metrics log: " + metrics_path);
  }
  RolloutBuffer buffer;
  for (int i = 0; i < iterations; ++i) {
    const CollectResult boot = collect_rollout(buffer);
    IterationMetrics m = update(buffer, boot);
    if (metrics_out.is_open()) metrics_out << m.to_json().dump() << "\n" << std::flush;
    history.push_back(std::move(m));
  }
  return history;
}

namespace {
constexpr int kCheckpointVersion = 1;

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}
}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  json payload;
  payload["format"] = "slicesim-checkpoint";
  payload["version"] = kCheckpointVersion;
  payload["method"] = method_;
  payload["scenario"] = scenario_.to_json();
  payload["train"] = cfg_.to_json();
  payload["traffic"] = traffic_.to_json();
  payload["policy"] = policy_state_to_json(*policy_);
  payload["duals"] = {{"multipliers", to_vec(constraints_.multipliers)},
                      {"bounds", to_vec(constraints_.bounds)},
                      {"running_cost", to_vec(constraints_.running_cost)},
                      {"eta", constraints_.eta}};
  payload["adam_policy_t"] = adam_policy_->t();
  payload["adam_value_t"] = adam_value_->t();
  payload["iteration"] = iteration_;
  payload["env_steps"] = env_steps_;
  payload["rng"] = rng_.serialize();

  json file = payload;
  file["integrity"] = to_hex(fnv1a64(payload.dump()));
  write_text_file(path, file.dump());
}

Trainer Trainer::load_checkpoint(const std::string& path) {
  json file = load_json_file(path);
  if (file.value("format", "") != "slicesim-checkpoint") {
    throw InputError(path + ": not a slicesim checkpoint");
  }
  if (file.value("version", -1) != kCheckpointVersion) {
    throw InputError(path + ": checkpoint version " + std::to_string(file.value("version", -1)) +
                     " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  if (!file.contains("integrity")) throw InputError(path + ": missing integrity stamp");
  const std::string stamp = file.at("integrity").get<std::string>();
  json payload = file;
  payload.erase("integrity");
  if (to_hex(fnv1a64(payload.dump())) != stamp) {
    throw InputError(path + ": integrity check failed (corrupt or edited checkpoint)");
  }

  Scenario scenario = Scenario::from_json(payload.at("scenario"));
  TrainConfig cfg = TrainConfig::from_json(payload.at("train"));
  TrafficConfig traffic = TrafficConfig::from_json(payload.at("traffic"));
  Trainer trainer(std::move(scenario), cfg, std::move(traffic),
                  payload.at("method").get<std::string>());

  policy_state_from_json(*trainer.policy_, payload.at("policy"));
  const json& duals = payload.at("duals");
  trainer.constraints_.multipliers = from_vec(duals.at("multipliers").get<std::vector<double>>());
  trainer.constraints_.bounds = from_vec(duals.at("bounds").get<std::vector<double>>());
  trainer.constraints_.running_cost = from_vec(duals.at("running_cost").get<std::vector<double>>());
  trainer.constraints_.eta = duals.at("eta").get<double>();
  trainer.adam_policy_->set_t(payload.at("adam_policy_t").get<long>());
  trainer.adam_value_->set_t(payload.at("adam_value_t").get<long>());
  trainer.iteration_ = payload.at("iteration").get<long>();
  trainer.env_steps_ = payload.at("env_steps").get<long>();
  trainer.rng_.deserialize(payload.at("rng").get<std::string>());
  return trainer;
}

Trainer Trainer::load_checkpoint(const std::string& path, const Scenario& scenario) {
  Trainer trainer = load_checkpoint(path);
  const PolicyDims want = PolicyDims::of(scenario);
  const PolicyDims have = PolicyDims::of(trainer.scenario_);
  if (!(want == have)) {
    throw InputError(path + ": checkpoint was trained on " + std::to_string(have.num_slices) +
                     " slices/" + std::to_string(have.num_users) + " users/" +
                     std::to_string(have.num_cells) + " cells, scenario has " +
                     std::to_string(want.num_slices) + "/" + std::to_string(want.num_users) + "/" +
                     std::to_string(want.num_cells));
  }
  return trainer;
}

}  // namespace slicesim
