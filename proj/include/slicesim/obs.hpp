#pragma once

#include <Eigen/Dense>
#include <vector>

#include "slicesim/env.hpp"

namespace slicesim {

inline constexpr int kNodeFeatureDim = 10;
inline constexpr int kUserFeatureDim = 8;

// Policy-facing snapshot of the environment: a slice/cell feature graph, the
// per-slice observation history, and per-user features. All features are
// pre-scaled to O(1) ranges using scenario capacities.
struct Observation {
  Eigen::MatrixXd node_features;  // (num_slices + num_cells) x kNodeFeatureDim
  Eigen::MatrixXd adjacency;      // square 0/1 mask with self loops
  std::vector<Eigen::MatrixXd> history;  // exactly H frames, oldest first,
                                         // zero-padded at episode start
  Eigen::MatrixXd user_features;  // num_users x kUserFeatureDim
  std::vector<int> user_slice;
  int num_slices = 0;
  int num_cells = 0;
};

Observation build_observation(const SliceEnv& env);

// Flat view used by the non-graph baselines: latest history frame, slice
// margins, and user features concatenated into one vector.
Eigen::VectorXd flatten_observation(const Observation& obs);
int flat_observation_dim(const Scenario& scenario);

}  // namespace slicesim
