#include "slicesim/env.hpp"

#include <algorithm>
#include <cmath>

#include "slicesim/service_model.hpp"

namespace slicesim {

AllocationDecision project_decision(const AllocationDecision& raw, const Scenario& scenario,
                                    ProjectionReport* report) {
  const int S = scenario.num_slices();
  const int U = scenario.num_users();
  if (raw.admissions.size() != S || raw.slice_budgets.rows() != S ||
      raw.user_allocations.rows() != U) {
    throw InputError("project_decision: decision shape does not match scenario");
  }

  AllocationDecision out = raw;
  out.slice_budgets = raw.slice_budgets.cwiseMax(0.0);
  out.user_allocations = raw.user_allocations.cwiseMax(0.0);

  // Non-admitted slices hold nothing.
  for (int s = 0; s < S; ++s) {
    if (raw.admissions[s] != 0) continue;
    out.slice_budgets.row(s).setZero();
    for (int u : scenario.slice_users[s]) out.user_allocations.row(u).setZero();
  }

  ProjectionReport rep;
  rep.domain_scale = Eigen::VectorXd::Ones(kNumDomains);
  rep.slice_scale = Eigen::MatrixXd::Ones(S, kNumDomains);

  for (int d = 0; d < kNumDomains; ++d) {
    const double total = out.slice_budgets.col(d).sum();
    const double cap = scenario.pool.capacity[d];
    if (total > cap && total > 0) {
      rep.domain_scale[d] = cap / total;
      out.slice_budgets.col(d) *= rep.domain_scale[d];
    }
  }

  for (int s = 0; s < S; ++s) {
    for (int d = 0; d < kNumDomains; ++d) {
      double used = 0;
      for (int u : scenario.slice_users[s]) used += out.user_allocations(u, d);
      const double budget = out.slice_budgets(s, d);
      if (used > budget) {
        const double scale = used > 0 ? budget / used : 0.0;
        rep.slice_scale(s, d) = scale;
        for (int u : scenario.slice_users[s]) out.user_allocations(u, d) *= scale;
      }
    }
  }

  if (report) *report = rep;
  return out;
}

double aggregate_slice_usage(const AllocationDecision& decision, const Scenario& scenario,
                             int slice, Domain domain) {
  if (slice < 0 || slice >= scenario.num_slices()) {
    throw InputError("aggregate_slice_usage: unknown slice index " + std::to_string(slice));
  }
  double total = 0;
  for (int u : scenario.slice_users[slice]) {
    total += decision.user_allocations(u, static_cast<int>(domain));
  }
  return total;
}

SliceEnv::SliceEnv(Scenario scenario, TrafficTrace trace, int history_len)
    : scenario_(std::move(scenario)), trace_(std::move(trace)), history_len_(history_len) {
  if (trace_.num_slices() != scenario_.num_slices()) {
    throw InputError("SliceEnv: trace slice count does not match scenario");
  }
  reset();
}

void SliceEnv::set_trace(TrafficTrace trace) {
  if (trace.num_slices() != scenario_.num_slices()) {
    throw InputError("SliceEnv: trace slice count does not match scenario");
  }
  trace_ = std::move(trace);
}

const EnvState& SliceEnv::reset() {
  const int S = scenario_.num_slices();
  state_.step_index = 0;
  state_.backlog = Eigen::VectorXd::Zero(scenario_.num_users());
  state_.load_multiplier = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    state_.load_multiplier[s] = trace_.steps() > 0 ? trace_.at(0, s) : 0.0;
  }
  state_.history.clear();
  state_.slice_margins = Eigen::MatrixXd::Zero(S, 3);
  return state_;
}

double SliceEnv::effective_arrival(int user) const {
  const auto& u = scenario_.users[user];
  return u.arrival_rate * state_.load_multiplier[u.slice];
}

StepOutcome SliceEnv::step(const AllocationDecision& raw_decision) {
  const int S = scenario_.num_slices();
  const int U = scenario_.num_users();
  const double dt = scenario_.dt;

  StepOutcome out;
  out.applied = project_decision(raw_decision, scenario_, &out.projection);
  out.records.resize(U);
  out.slice_served_rate = Eigen::VectorXd::Zero(S);
  out.slice_target_rate = Eigen::VectorXd::Zero(S);

  Eigen::VectorXd slice_delay_viol = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd slice_thr_viol = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd slice_rel_viol = Eigen::VectorXd::Zero(S);
  Eigen::MatrixXd margins = Eigen::MatrixXd::Zero(S, 3);
  Eigen::VectorXd slice_users_n = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd slice_backlog = Eigen::VectorXd::Zero(S);

  for (int u = 0; u < U; ++u) {
    const auto& user = scenario_.users[u];
    const auto& spec = scenario_.slices[user.slice];
    const double lambda_eff = effective_arrival(u);
    const double backlog = state_.backlog[u];
    const double offered = backlog + lambda_eff * dt;

    // Radio units buy scheduling opportunity; the wireless term is capped by
    // the channel's achievable rate.
    const double radio_rate =
        std::min(user.wireless_rate, out.applied.user_allocations(u, 0) * scenario_.radio_unit_rate);
    const double bw_rate = out.applied.user_allocations(u, 1);
    const double compute_rate = out.applied.user_allocations(u, 2) / user.compute_demand;

    const double rate = std::min({radio_rate, bw_rate, compute_rate});
    const double served = std::min(rate * dt, offered);

    Eigen::Vector3d rates(radio_rate, bw_rate, compute_rate);
    const double lambda_delay = lambda_eff + backlog / dt;  // congestion-aware arrival
    const double delay =
        offered > 0 ? end_to_end_delay(user.packet_size, lambda_delay, rates, scenario_.epsilon) : 0.0;

    QoSRecord& rec = out.records[u];
    rec.user = u;
    rec.achieved_rate = rate;
    rec.delay = delay;
    rec.offered_bits = offered;
    rec.served_bits = served;
    rec.reliability = offered > 0 ? (delay <= spec.delay_bound ? served / offered : 0.0) : 1.0;
    rec.delay_violation = delay > spec.delay_bound;
    rec.throughput_violation = rate < spec.min_throughput;
    rec.reliability_violation = rec.reliability < spec.reliability_target;

    state_.backlog[u] = std::max(0.0, offered - served);
    out.served_bits += served;

    const int s = user.slice;
    slice_users_n[s] += 1;
    slice_backlog[s] += state_.backlog[u];
    out.slice_served_rate[s] += served / dt;
    out.slice_target_rate[s] += std::max(spec.min_throughput, lambda_eff);
    slice_delay_viol[s] += rec.delay_violation ? 1 : 0;
    slice_thr_viol[s] += rec.throughput_violation ? 1 : 0;
    slice_rel_viol[s] += rec.reliability_violation ? 1 : 0;
    margins(s, 0) += clip01(spec.delay_bound / std::max(delay, 1e-12));
    margins(s, 1) += clip01(rate / std::max(spec.min_throughput, 1e-12));
    margins(s, 2) += clip01(rec.reliability / std::max(spec.reliability_target, 1e-12));
  }

  for (int s = 0; s < S; ++s) {
    const double n = std::max(slice_users_n[s], 1.0);
    slice_delay_viol[s] /= n;
    slice_thr_viol[s] /= n;
    slice_rel_viol[s] /= n;
    margins.row(s) /= n;
  }
  state_.slice_margins = margins;

  const bool none_admitted = out.applied.admissions.sum() == 0;
  out.costs = Eigen::VectorXd::Zero(kNumConstraints);
  if (none_admitted) {
    // Empty action: every constraint reads fully violated.
    out.costs.setOnes();
  } else {
    out.costs[static_cast<int>(Constraint::DelayViolation)] =
        U > 0 ? slice_delay_viol.dot(slice_users_n) / U : 0.0;
    out.costs[static_cast<int>(Constraint::ReliabilityViolation)] =
        U > 0 ? slice_rel_viol.dot(slice_users_n) / U : 0.0;
    out.costs[static_cast<int>(Constraint::IsolationOverdraw)] = out.projection.overdraw_cost();
  }

  for (int d = 0; d < kNumDomains; ++d) {
    out.domain_usage[d] = out.applied.user_allocations.col(d).sum();
  }

  // History entry for the step just simulated.
  Eigen::MatrixXd hist(S, kHistFeatureDim);
  for (int s = 0; s < S; ++s) {
    const double backlog_norm =
        slice_backlog[s] / std::max(scenario_.pool.capacity[1] * dt, 1e-12);
    hist(s, 0) = state_.load_multiplier[s];
    hist(s, 1) = std::min(backlog_norm, 5.0);
    hist(s, 2) = slice_delay_viol[s];
    hist(s, 3) = slice_thr_viol[s];
    hist(s, 4) = slice_rel_viol[s];
    for (int d = 0; d < kNumDomains; ++d) {
      double slice_use = 0;
      for (int u : scenario_.slice_users[s]) slice_use += out.applied.user_allocations(u, d);
      hist(s, 5 + d) = slice_use / scenario_.pool.capacity[d];
    }
  }
  state_.history.push_back(std::move(hist));
  while (static_cast<int>(state_.history.size()) > history_len_) state_.history.pop_front();

  ++state_.step_index;
  if (state_.step_index < trace_.steps()) {
    for (int s = 0; s < S; ++s) state_.load_multiplier[s] = trace_.at(state_.step_index, s);
  }
  return out;
}

}  // namespace slicesim
