#include "slicesim/obs.hpp"

#include <algorithm>
#include <cmath>

namespace slicesim {

namespace {

struct FeatureScales {
  double rate;      // per-user service-rate scale, bits/s
  double backlog;   // bits
  double demand;    // cycles/bit
  double priority;

  explicit FeatureScales(const Scenario& sc) {
    const double users = std::max(1, sc.num_users());
    rate = sc.pool.capacity[1] / users;
    backlog = rate * sc.dt * 4.0;
    demand = sc.pool.capacity[2] / sc.pool.capacity[1];
    priority = 1e-9;
    for (const auto& s : sc.slices) priority = std::max(priority, s.priority);
  }
};

double squash(double x) { return std::min(x, 5.0); }

}  // namespace

Observation build_observation(const SliceEnv& env) {
  const Scenario& sc = env.scenario();
  const EnvState& st = env.state();
  const FeatureScales scale(sc);
  const int S = sc.num_slices();
  const int C = sc.num_cells;
  const int U = sc.num_users();
  const int N = S + C;

  Observation obs;
  obs.num_slices = S;
  obs.num_cells = C;
  obs.user_slice.resize(U);

  // Per-slice aggregates for node features.
  Eigen::VectorXd slice_lambda = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd slice_backlog = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd cell_lambda = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd cell_backlog = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd cell_users = Eigen::VectorXd::Zero(C);
  for (int u = 0; u < U; ++u) {
    const auto& user = sc.users[u];
    const double lam = env.effective_arrival(u);
    slice_lambda[user.slice] += lam;
    slice_backlog[user.slice] += st.backlog[u];
    cell_lambda[user.cell] += lam;
    cell_backlog[user.cell] += st.backlog[u];
    cell_users[user.cell] += 1;
    obs.user_slice[u] = user.slice;
  }

  obs.node_features = Eigen::MatrixXd::Zero(N, kNodeFeatureDim);
  for (int s = 0; s < S; ++s) {
    const auto& spec = sc.slices[s];
    const double n_users = static_cast<double>(sc.slice_users[s].size());
    auto row = obs.node_features.row(s);
    row[0] = 1.0;  // slice-node marker
    row[1 + static_cast<int>(spec.service_class)] = 1.0;
    row[4] = spec.priority / scale.priority;
    row[5] = st.load_multiplier[s];
    row[6] = squash(slice_lambda[s] / sc.pool.capacity[1]);
    row[7] = squash(slice_backlog[s] / (scale.backlog * std::max(n_users, 1.0)));
    row[8] = n_users / std::max(1, U);
    row[9] = st.slice_margins.row(s).mean();
  }
  for (int c = 0; c < C; ++c) {
    auto row = obs.node_features.row(S + c);
    row[5] = st.load_multiplier.mean();
    row[6] = squash(cell_lambda[c] / sc.pool.capacity[1]);
    row[7] = squash(cell_backlog[c] / (scale.backlog * std::max(cell_users[c], 1.0)));
    row[8] = cell_users[c] / std::max(1, U);
  }

  // Slice<->cell membership, cell<->cell ring, self loops.
  obs.adjacency = Eigen::MatrixXd::Identity(N, N);
  std::vector<char> slice_connected(S, 0);
  for (int u = 0; u < U; ++u) {
    const auto& user = sc.users[u];
    obs.adjacency(user.slice, S + user.cell) = 1.0;
    obs.adjacency(S + user.cell, user.slice) = 1.0;
    slice_connected[user.slice] = 1;
  }
  for (int s = 0; s < S; ++s) {
    if (!slice_connected[s]) {
      obs.adjacency(s, S) = 1.0;
      obs.adjacency(S, s) = 1.0;
    }
  }
  for (int c = 0; c < C && C > 1; ++c) {
    const int nxt = (c + 1) % C;
    obs.adjacency(S + c, S + nxt) = 1.0;
    obs.adjacency(S + nxt, S + c) = 1.0;
  }

  const int H = env.history_len();
  obs.history.reserve(H);
  const int have = static_cast<int>(st.history.size());
  for (int k = 0; k < H - have; ++k) {
    obs.history.push_back(Eigen::MatrixXd::Zero(S, kHistFeatureDim));
  }
  for (const auto& frame : st.history) obs.history.push_back(frame);

  obs.user_features = Eigen::MatrixXd::Zero(U, kUserFeatureDim);
  for (int u = 0; u < U; ++u) {
    const auto& user = sc.users[u];
    const auto& spec = sc.slices[user.slice];
    auto row = obs.user_features.row(u);
    row[0] = squash(env.effective_arrival(u) / scale.rate);
    row[1] = squash(st.backlog[u] / scale.backlog);
    row[2] = squash(user.wireless_rate / (scale.rate * 8.0));
    row[3] = squash(user.compute_demand / scale.demand);
    row[4] = squash(user.packet_size / (scale.rate * spec.delay_bound));
    row[5] = squash(spec.min_throughput / scale.rate);
    row[6] = squash(1.0 / (spec.delay_bound * 100.0));
    row[7] = spec.priority / scale.priority;
  }
  return obs;
}

Eigen::VectorXd flatten_observation(const Observation& obs) {
  const Eigen::MatrixXd& latest =
      obs.history.empty() ? Eigen::MatrixXd::Zero(obs.num_slices, kHistFeatureDim).eval()
                          : obs.history.back();
  const int S = obs.num_slices;
  const int U = static_cast<int>(obs.user_features.rows());
  Eigen::VectorXd flat(S * kHistFeatureDim + S * kNodeFeatureDim + U * kUserFeatureDim);
  int at = 0;
  for (int s = 0; s < S; ++s) {
    flat.segment(at, kHistFeatureDim) = latest.row(s);
    at += kHistFeatureDim;
  }
  for (int s = 0; s < S; ++s) {
    flat.segment(at, kNodeFeatureDim) = obs.node_features.row(s);
    at += kNodeFeatureDim;
  }
  for (int u = 0; u < U; ++u) {
    flat.segment(at, kUserFeatureDim) = obs.user_features.row(u);
    at += kUserFeatureDim;
  }
  return flat;
}

int flat_observation_dim(const Scenario& scenario) {
  return scenario.num_slices() * (kHistFeatureDim + kNodeFeatureDim) +
         scenario.num_users() * kUserFeatureDim;
}

}  // namespace slicesim
