#include "slicesim/reward.hpp"

#include <cmath>

#include "slicesim/service_model.hpp"

namespace slicesim {

ObjectiveVector objective_vector(const StepOutcome& outcome, const Scenario& scenario) {
  if (outcome.records.empty()) throw InputError("objective_vector: no QoS records");

  double u_delay = 0, u_thr = 0, u_rel = 0;
  for (const auto& rec : outcome.records) {
    const auto& spec = scenario.slices[scenario.users[rec.user].slice];
    u_delay += clip01(spec.delay_bound / std::max(rec.delay, 1e-12));
    u_thr += clip01(rec.achieved_rate / std::max(spec.min_throughput, 1e-12));
    u_rel += rec.reliability;
  }
  const double n = static_cast<double>(outcome.records.size());
  u_delay /= n;
  u_thr /= n;
  u_rel /= n;

  // Fairness over slices that actually have users; throughputs are normalized
  // by each slice's demand/target level so unequal slice sizes compare fairly.
  std::vector<double> normalized;
  for (int s = 0; s < scenario.num_slices(); ++s) {
    if (scenario.slice_users[s].empty()) continue;
    normalized.push_back(outcome.slice_served_rate[s] /
                         std::max(outcome.slice_target_rate[s], 1e-12));
  }
  const double u_fair =
      jain_index(Eigen::Map<const Eigen::VectorXd>(normalized.data(), normalized.size()));

  const double u_iso = outcome.projection.domain_scale.mean();

  ObjectiveVector out;
  out.u = Eigen::VectorXd(kNumObjectives);
  out.u << clip01(u_delay), clip01(u_thr), clip01(u_rel), clip01(u_fair), clip01(u_iso);
  out.v = Eigen::VectorXd::Ones(kNumObjectives) - out.u;
  return out;
}

Eigen::VectorXd adaptive_weights(const Eigen::VectorXd& violations, double kappa) {
  if (kappa < 0) throw InputError("adaptive_weights: kappa must be >= 0");
  const Eigen::ArrayXd scaled = kappa * violations.array();
  const Eigen::ArrayXd ex = (scaled - scaled.maxCoeff()).exp();
  return (ex / ex.sum()).matrix();
}

double base_reward(const Eigen::VectorXd& utilities, const Eigen::VectorXd& weights) {
  if (utilities.size() != weights.size()) throw InputError("base_reward: size mismatch");
  return utilities.dot(weights);
}

double shaped_reward(double reward, double potential_s, double potential_next, double discount) {
  return reward + discount * potential_next - potential_s;
}

double penalized_reward(double shaped, const Eigen::VectorXd& costs,
                        const Eigen::VectorXd& multipliers) {
  if (costs.size() != multipliers.size()) throw InputError("penalized_reward: size mismatch");
  return shaped - multipliers.dot(costs);
}

double shaping_potential(const EnvState& state) {
  if (state.slice_margins.size() == 0) return 0.0;
  return clip01(state.slice_margins.mean());
}

ConstraintState ConstraintState::init(const Eigen::VectorXd& bounds, double eta) {
  ConstraintState s;
  s.multipliers = Eigen::VectorXd::Zero(bounds.size());
  s.bounds = bounds;
  s.running_cost = Eigen::VectorXd::Zero(bounds.size());
  s.eta = eta;
  return s;
}

ConstraintState dual_update(const ConstraintState& state, const Eigen::VectorXd& batch_mean_costs) {
  if (batch_mean_costs.size() != state.bounds.size()) {
    throw InputError("dual_update: cost vector size mismatch");
  }
  if (!(state.eta > 0)) throw InputError("dual_update: eta must be > 0");
  ConstraintState next = state;
  next.running_cost = batch_mean_costs;
  next.multipliers =
      (state.multipliers + state.eta * (batch_mean_costs - state.bounds)).cwiseMax(0.0);
  return next;
}

}  // namespace slicesim
