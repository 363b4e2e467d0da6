#include "slicesim/policy.hpp"

#include <cmath>

namespace slicesim {

using ad::Mat;
using ad::Tape;
using ad::Var;

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)
constexpr int kPolicyFormatVersion = 1;

std::vector<std::vector<int>> group_users(const std::vector<int>& user_slice, int num_slices) {
  std::vector<std::vector<int>> groups(num_slices);
  for (size_t u = 0; u < user_slice.size(); ++u) {
    groups[user_slice[u]].push_back(static_cast<int>(u));
  }
  return groups;
}

// Sum of independent Gaussian log-densities over the selected rows of the
// mean matrix; z holds the sampled values for exactly those rows.
Var gaussian_logp_rows(Tape& t, Var means, const Mat& z, Var log_std,
                       const std::vector<int>& rows) {
  Var m = ad::gather_rows(means, rows);
  Var diff = ad::sub(t.constant(z), m);
  Var inv_std = ad::exp_(ad::neg(log_std));
  Var u = ad::mul_rowvec(diff, inv_std);
  Var per = ad::add_rowvec(ad::scale(ad::square(u), -0.5), ad::neg(log_std));
  return ad::sum(ad::add(per, -kHalfLog2Pi));
}

// Entropy of n_rows independent Gaussian rows with shared per-column log-std.
Var gaussian_entropy(Tape& t, Var log_std, int n_rows) {
  Var per_dim = ad::add(ad::sum(log_std), (0.5 + kHalfLog2Pi) * log_std.cols());
  (void)t;
  return ad::scale(per_dim, static_cast<double>(n_rows));
}

Var bernoulli_logp(Tape& t, Var logits, const Mat& taken01) {
  Var sp_pos = ad::softplus(logits);
  Var sp_neg = ad::softplus(ad::neg(logits));
  Mat not_taken = Mat::Ones(taken01.rows(), taken01.cols()) - taken01;
  Var nll = ad::add(ad::cmul(sp_neg, taken01), ad::cmul(sp_pos, not_taken));
  (void)t;
  return ad::neg(ad::sum(nll));
}

Var bernoulli_entropy(Tape& t, Var logits) {
  Var p = ad::sigmoid(logits);
  Var sp_pos = ad::softplus(logits);
  Var sp_neg = ad::softplus(ad::neg(logits));
  Var one_minus_p = ad::sub(t.constant(Mat::Ones(logits.rows(), logits.cols())), p);
  return ad::sum(ad::add(ad::cmul(p, sp_neg), ad::cmul(one_minus_p, sp_pos)));
}

Mat gather_const_rows(const Mat& m, const std::vector<int>& rows) {
  Mat out(static_cast<int>(rows.size()), m.cols());
  for (size_t k = 0; k < rows.size(); ++k) out.row(static_cast<int>(k)) = m.row(rows[k]);
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError("invalid action: " + what);
}

}  // namespace

Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, const Eigen::VectorXi& mask) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(logits.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < logits.size(); ++i) {
    if (mask[i] != 0) mx = std::max(mx, logits[i]);
  }
  if (!std::isfinite(mx)) return out;
  double z = 0;
  for (int i = 0; i < logits.size(); ++i) {
    if (mask[i] != 0) {
      out[i] = std::exp(logits[i] - mx);
      z += out[i];
    }
  }
  if (z > 0) out /= z;
  return out;
}

AllocationDecision decision_from_action(const HierarchicalAction& action,
                                        const std::vector<int>& user_slice,
                                        const Eigen::Vector3d& capacity,
                                        Eigen::MatrixXd* budgets_out) {
  const int S = static_cast<int>(action.admissions.size());
  const int U = static_cast<int>(user_slice.size());

  AllocationDecision dec = AllocationDecision::zeros(S, U);
  dec.admissions = action.admissions;

  Eigen::MatrixXd budgets(S, kNumDomains);
  if (action.upper_decision) {
    for (int d = 0; d < kNumDomains; ++d) {
      budgets.col(d) = masked_softmax(action.budget_z.col(d), action.admissions) * capacity[d];
    }
  } else {
    budgets = action.held_budgets;
  }
  dec.slice_budgets = budgets;
  if (budgets_out) *budgets_out = budgets;

  const auto groups = group_users(user_slice, S);
  for (int s = 0; s < S; ++s) {
    if (action.admissions[s] == 0 || groups[s].empty()) continue;
    Eigen::VectorXi ones = Eigen::VectorXi::Ones(static_cast<int>(groups[s].size()));
    for (int d = 0; d < kNumDomains; ++d) {
      Eigen::VectorXd logits(static_cast<int>(groups[s].size()));
      for (size_t k = 0; k < groups[s].size(); ++k) logits[static_cast<int>(k)] = action.user_z(groups[s][k], d);
      const Eigen::VectorXd ratios = masked_softmax(logits, ones);
      for (size_t k = 0; k < groups[s].size(); ++k) {
        dec.user_allocations(groups[s][k], d) = ratios[static_cast<int>(k)] * budgets(s, d);
      }
    }
  }
  return dec;
}

// ---- SpatioTemporalPolicy ---------------------------------------------------

SpatioTemporalPolicy::SpatioTemporalPolicy(const PolicyDims& dims, const TrainConfig& cfg,
                                           const Eigen::Vector3d& capacity,
                                           unsigned long init_seed)
    : dims_(dims),
      embed_dim_(cfg.embed_dim),
      history_len_(cfg.history_window),
      capacity_(capacity) {
  if (embed_dim_ % (2 * cfg.gat_heads) != 0) {
    throw ConfigError("embed_dim must be divisible by 2*gat_heads");
  }
  Rng rng(init_seed);
  const int gat_out = embed_dim_ / 2;
  const int head_dim = gat_out / cfg.gat_heads;
  gat_ = nn::GatLayer("encoder.gat", kNodeFeatureDim, head_dim, cfg.gat_heads, rng);
  lstm_ = nn::BiLstm("encoder.bilstm", kHistFeatureDim, cfg.lstm_hidden, rng);
  fuse_ = nn::Dense("encoder.fuse", gat_out + 2 * cfg.lstm_hidden, embed_dim_, rng);
  // Positive admission bias so training starts near admit-everything.
  adm_head_ = nn::Dense("upper.admission", embed_dim_, 1, rng, 2.0);
  budget_head_ = nn::Dense("upper.budget", embed_dim_, kNumDomains, rng);
  user_hidden_ = nn::Dense("lower.hidden", embed_dim_ + kUserFeatureDim, 64, rng);
  user_head_ = nn::Dense("lower.logits", 64, kNumDomains, rng);
  value_hidden_ = nn::Dense("critic.hidden", embed_dim_, 64, rng);
  value_head_ = nn::Dense("critic.value", 64, 1, rng);
  cost_head_ = nn::Dense("critic.cost", 64, kNumConstraints, rng);
  log_std_budget_ = ad::Param("upper.log_std", Mat::Constant(1, kNumDomains, -0.7));
  log_std_user_ = ad::Param("lower.log_std", Mat::Constant(1, kNumDomains, -0.7));
}

Var SpatioTemporalPolicy::encode(Tape& tape, const Observation& obs) {
  if (obs.node_features.cols() != kNodeFeatureDim) {
    throw InputError("encode: node features have dim " + std::to_string(obs.node_features.cols()) +
                     ", expected " + std::to_string(kNodeFeatureDim));
  }
  if (static_cast<int>(obs.history.size()) != history_len_) {
    throw InputError("encode: history window holds " + std::to_string(obs.history.size()) +
                     " frames, expected " + std::to_string(history_len_));
  }
  for (const auto& frame : obs.history) {
    if (frame.rows() != obs.num_slices || frame.cols() != kHistFeatureDim) {
      throw InputError("encode: history frame shape mismatch");
    }
  }

  Var nodes = tape.constant(obs.node_features);
  Var graph_all = gat_.apply(tape, nodes, obs.adjacency);
  std::vector<int> slice_rows(obs.num_slices);
  for (int s = 0; s < obs.num_slices; ++s) slice_rows[s] = s;
  Var graph_emb = ad::gather_rows(graph_all, slice_rows);
  Var temporal = lstm_.apply(tape, obs.history);
  return ad::tanh_(fuse_.apply(tape, ad::hcat(graph_emb, temporal)));
}

SpatioTemporalPolicy::Heads SpatioTemporalPolicy::compute_heads(Tape& tape,
                                                                const Observation& obs) {
  Heads h;
  h.embeddings = encode(tape, obs);
  h.adm_logits = adm_head_.apply(tape, h.embeddings);
  h.budget_means = budget_head_.apply(tape, h.embeddings);

  Var user_emb = ad::gather_rows(h.embeddings, obs.user_slice);
  Var user_in = ad::hcat(user_emb, tape.constant(obs.user_features));
  h.user_means = user_head_.apply(tape, ad::tanh_(user_hidden_.apply(tape, user_in)));

  Var pooled = ad::col_means(h.embeddings);
  Var vh = ad::tanh_(value_hidden_.apply(tape, pooled));
  h.value = value_head_.apply(tape, vh);
  h.cost_values = cost_head_.apply(tape, vh);
  h.log_std_budget = tape.param(log_std_budget_);
  h.log_std_user = tape.param(log_std_user_);
  return h;
}

ActionEval SpatioTemporalPolicy::score_action(Tape& tape, const Heads& heads,
                                              const Observation& obs,
                                              const HierarchicalAction& action) {
  const int S = dims_.num_slices;
  std::vector<int> admitted_slices;
  for (int s = 0; s < S; ++s) {
    if (action.admissions[s] != 0) admitted_slices.push_back(s);
  }
  std::vector<int> admitted_users;
  for (size_t u = 0; u < obs.user_slice.size(); ++u) {
    if (action.admissions[obs.user_slice[u]] != 0) admitted_users.push_back(static_cast<int>(u));
  }

  Var logp = tape.scalar(0.0);
  Var entropy = tape.scalar(0.0);

  if (action.upper_decision) {
    Mat taken(S, 1);
    for (int s = 0; s < S; ++s) taken(s, 0) = action.admissions[s] != 0 ? 1.0 : 0.0;
    logp = ad::add(logp, bernoulli_logp(tape, heads.adm_logits, taken));
    entropy = ad::add(entropy, bernoulli_entropy(tape, heads.adm_logits));

    if (!admitted_slices.empty()) {
      const Mat z = gather_const_rows(action.budget_z, admitted_slices);
      logp = ad::add(logp, gaussian_logp_rows(tape, heads.budget_means, z,
                                              heads.log_std_budget, admitted_slices));
      entropy = ad::add(entropy, gaussian_entropy(tape, heads.log_std_budget,
                                                  static_cast<int>(admitted_slices.size())));
    }
  }

  if (!admitted_users.empty()) {
    const Mat z = gather_const_rows(action.user_z, admitted_users);
    logp = ad::add(logp, gaussian_logp_rows(tape, heads.user_means, z, heads.log_std_user,
                                            admitted_users));
    entropy = ad::add(entropy, gaussian_entropy(tape, heads.log_std_user,
                                                static_cast<int>(admitted_users.size())));
  }

  return ActionEval{logp, entropy, heads.value, heads.cost_values};
}

void SpatioTemporalPolicy::check_action(const Observation& obs,
                                        const HierarchicalAction& action) const {
  require(action.admissions.size() == dims_.num_slices, "admission vector size");
  require(action.budget_z.rows() == dims_.num_slices &&
              action.budget_z.cols() == kNumDomains,
          "budget logits shape");
  require(action.user_z.rows() == static_cast<int>(obs.user_slice.size()) &&
              action.user_z.cols() == kNumDomains,
          "user logits shape");
  for (int s = 0; s < dims_.num_slices; ++s) {
    require(action.admissions[s] == 0 || action.admissions[s] == 1, "admissions must be 0/1");
  }
  require(action.budget_z.allFinite() && action.user_z.allFinite(), "non-finite logits");
}

ActSample SpatioTemporalPolicy::act(const Observation& obs, ActionMode mode, Rng& rng,
                                    bool upper_step, const HierarchicalAction* held) {
  if (held == nullptr) upper_step = true;  // episode start always decides budgets

  Tape tape;
  Heads heads = compute_heads(tape, obs);

  const int S = dims_.num_slices;
  const int U = dims_.num_users;
  HierarchicalAction action;
  action.upper_decision = upper_step;

  if (upper_step) {
    action.admissions = Eigen::VectorXi::Zero(S);
    action.budget_z = Mat::Zero(S, kNumDomains);
    const Mat& logits = heads.adm_logits.val();
    const Mat& means = heads.budget_means.val();
    for (int s = 0; s < S; ++s) {
      const double p = 1.0 / (1.0 + std::exp(-logits(s, 0)));
      action.admissions[s] = mode == ActionMode::Sample ? (rng.uniform() < p ? 1 : 0)
                                                        : (p >= 0.5 ? 1 : 0);
    }
    for (int s = 0; s < S; ++s) {
      if (action.admissions[s] == 0) continue;
      for (int d = 0; d < kNumDomains; ++d) {
        const double sigma = std::exp(log_std_budget_.value(0, d));
        action.budget_z(s, d) = mode == ActionMode::Sample
                                    ? means(s, d) + sigma * rng.gaussian()
                                    : means(s, d);
      }
    }
  } else {
    action.admissions = held->admissions;
    action.budget_z = held->budget_z;
    action.held_budgets = held->held_budgets;
  }

  action.user_z = Mat::Zero(U, kNumDomains);
  const Mat& user_means = heads.user_means.val();
  for (int u = 0; u < U; ++u) {
    if (action.admissions[obs.user_slice[u]] == 0) continue;
    for (int d = 0; d < kNumDomains; ++d) {
      const double sigma = std::exp(log_std_user_.value(0, d));
      action.user_z(u, d) = mode == ActionMode::Sample ? user_means(u, d) + sigma * rng.gaussian()
                                                       : user_means(u, d);
    }
  }

  ActSample sample;
  Eigen::MatrixXd budgets;
  sample.decision = decision_from_action(action, obs.user_slice, capacity_, &budgets);
  action.held_budgets = budgets;
  sample.action = std::move(action);

  ActionEval eval = score_action(tape, heads, obs, sample.action);
  sample.log_prob = eval.log_prob.scalar();
  sample.value = eval.value.scalar();
  sample.cost_values = eval.cost_values.val().row(0);
  return sample;
}

ActionEval SpatioTemporalPolicy::evaluate(Tape& tape, const Observation& obs,
                                          const HierarchicalAction& action) {
  check_action(obs, action);
  Heads heads = compute_heads(tape, obs);
  return score_action(tape, heads, obs, action);
}

PolicyOutput SpatioTemporalPolicy::forward(const Observation& obs) {
  Tape tape;
  Heads heads = compute_heads(tape, obs);
  PolicyOutput out;
  out.admission_probs =
      (1.0 / (1.0 + (-heads.adm_logits.val().col(0).array()).exp())).matrix();
  out.budget_logits = heads.budget_means.val();
  out.user_logits = heads.user_means.val();
  out.value = heads.value.scalar();
  out.cost_values = heads.cost_values.val().row(0);
  return out;
}

std::vector<ad::Param*> SpatioTemporalPolicy::parameters() {
  std::vector<ad::Param*> out;
  gat_.collect(out);
  lstm_.collect(out);
  fuse_.collect(out);
  adm_head_.collect(out);
  budget_head_.collect(out);
  user_hidden_.collect(out);
  user_head_.collect(out);
  value_hidden_.collect(out);
  value_head_.collect(out);
  cost_head_.collect(out);
  out.push_back(&log_std_budget_);
  out.push_back(&log_std_user_);
  return out;
}

std::vector<ad::Param*> SpatioTemporalPolicy::value_parameters() {
  std::vector<ad::Param*> out;
  value_hidden_.collect(out);
  value_head_.collect(out);
  cost_head_.collect(out);
  return out;
}

std::vector<ad::Param*> SpatioTemporalPolicy::upper_parameters() {
  std::vector<ad::Param*> out;
  adm_head_.collect(out);
  budget_head_.collect(out);
  out.push_back(&log_std_budget_);
  return out;
}

std::vector<ad::Param*> SpatioTemporalPolicy::lower_parameters() {
  std::vector<ad::Param*> out;
  user_hidden_.collect(out);
  user_head_.collect(out);
  out.push_back(&log_std_user_);
  return out;
}

json SpatioTemporalPolicy::hyperparams() const {
  return json{{"num_slices", dims_.num_slices},
              {"num_cells", dims_.num_cells},
              {"num_users", dims_.num_users},
              {"embed_dim", embed_dim_},
              {"gat_heads", gat_.heads},
              {"lstm_hidden", lstm_.hidden},
              {"history_window", history_len_},
              {"capacity", std::vector<double>{capacity_[0], capacity_[1], capacity_[2]}}};
}

// ---- FlatPolicy --------------------------------------------------------------

FlatPolicy::FlatPolicy(const PolicyDims& dims, int flat_dim, const TrainConfig& cfg,
                       const Eigen::Vector3d& capacity, unsigned long init_seed)
    : dims_(dims), flat_dim_(flat_dim), capacity_(capacity) {
  Rng rng(init_seed);
  const int hidden = cfg.hidden_dim;
  h1_ = nn::Dense("actor.h1", flat_dim, hidden, rng);
  h2_ = nn::Dense("actor.h2", hidden, hidden, rng);
  budget_head_ = nn::Dense("actor.budget", hidden, dims.num_slices * kNumDomains, rng);
  user_head_ = nn::Dense("actor.user", hidden, dims.num_users * kNumDomains, rng);
  value_hidden_ = nn::Dense("critic.hidden", hidden, 64, rng);
  value_head_ = nn::Dense("critic.value", 64, 1, rng);
  cost_head_ = nn::Dense("critic.cost", 64, kNumConstraints, rng);
  log_std_budget_ = ad::Param("actor.budget_log_std", Mat::Constant(1, kNumDomains, -0.7));
  log_std_user_ = ad::Param("actor.user_log_std", Mat::Constant(1, kNumDomains, -0.7));
}

FlatPolicy::Heads FlatPolicy::compute_heads(Tape& tape, const Observation& obs) {
  Eigen::VectorXd flat = flatten_observation(obs);
  if (flat.size() != flat_dim_) {
    throw InputError("FlatPolicy: observation flattens to " + std::to_string(flat.size()) +
                     ", expected " + std::to_string(flat_dim_));
  }
  Var x = tape.constant(flat.transpose());
  Var h = ad::tanh_(h2_.apply(tape, ad::tanh_(h1_.apply(tape, x))));

  Heads heads;
  heads.budget_means = ad::reshape(budget_head_.apply(tape, h), dims_.num_slices, kNumDomains);
  heads.user_means = ad::reshape(user_head_.apply(tape, h), dims_.num_users, kNumDomains);
  Var vh = ad::tanh_(value_hidden_.apply(tape, h));
  heads.value = value_head_.apply(tape, vh);
  heads.cost_values = cost_head_.apply(tape, vh);
  heads.log_std_budget = tape.param(log_std_budget_);
  heads.log_std_user = tape.param(log_std_user_);
  return heads;
}

ActionEval FlatPolicy::score_action(Tape& tape, const Heads& heads, const Observation& obs,
                                    const HierarchicalAction& action) {
  (void)obs;
  std::vector<int> all_slices(dims_.num_slices);
  for (int s = 0; s < dims_.num_slices; ++s) all_slices[s] = s;
  std::vector<int> all_users(dims_.num_users);
  for (int u = 0; u < dims_.num_users; ++u) all_users[u] = u;

  Var logp = gaussian_logp_rows(tape, heads.budget_means,
                                gather_const_rows(action.budget_z, all_slices),
                                heads.log_std_budget, all_slices);
  logp = ad::add(logp, gaussian_logp_rows(tape, heads.user_means,
                                          gather_const_rows(action.user_z, all_users),
                                          heads.log_std_user, all_users));
  Var entropy = ad::add(gaussian_entropy(tape, heads.log_std_budget, dims_.num_slices),
                        gaussian_entropy(tape, heads.log_std_user, dims_.num_users));
  return ActionEval{logp, entropy, heads.value, heads.cost_values};
}

ActSample FlatPolicy::act(const Observation& obs, ActionMode mode, Rng& rng, bool upper_step,
                          const HierarchicalAction* held) {
  (void)upper_step;
  (void)held;
  Tape tape;
  Heads heads = compute_heads(tape, obs);

  HierarchicalAction action;
  action.upper_decision = true;  // the flat actor re-decides everything each step
  action.admissions = Eigen::VectorXi::Ones(dims_.num_slices);
  action.budget_z = Mat::Zero(dims_.num_slices, kNumDomains);
  action.user_z = Mat::Zero(dims_.num_users, kNumDomains);
  for (int s = 0; s < dims_.num_slices; ++s) {
    for (int d = 0; d < kNumDomains; ++d) {
      const double sigma = std::exp(log_std_budget_.value(0, d));
      action.budget_z(s, d) = mode == ActionMode::Sample
                                  ? heads.budget_means.val()(s, d) + sigma * rng.gaussian()
                                  : heads.budget_means.val()(s, d);
    }
  }
  for (int u = 0; u < dims_.num_users; ++u) {
    for (int d = 0; d < kNumDomains; ++d) {
      const double sigma = std::exp(log_std_user_.value(0, d));
      action.user_z(u, d) = mode == ActionMode::Sample
                                ? heads.user_means.val()(u, d) + sigma * rng.gaussian()
                                : heads.user_means.val()(u, d);
    }
  }

  ActSample sample;
  Eigen::MatrixXd budgets;
  sample.decision = decision_from_action(action, obs.user_slice, capacity_, &budgets);
  action.held_budgets = budgets;
  sample.action = std::move(action);

  ActionEval eval = score_action(tape, heads, obs, sample.action);
  sample.log_prob = eval.log_prob.scalar();
  sample.value = eval.value.scalar();
  sample.cost_values = eval.cost_values.val().row(0);
  return sample;
}

ActionEval FlatPolicy::evaluate(Tape& tape, const Observation& obs,
                                const HierarchicalAction& action) {
  require(action.admissions.size() == dims_.num_slices, "admission vector size");
  require(action.admissions.sum() == dims_.num_slices, "flat actions admit every slice");
  require(action.budget_z.rows() == dims_.num_slices && action.user_z.rows() == dims_.num_users,
          "logit shapes");
  require(action.budget_z.allFinite() && action.user_z.allFinite(), "non-finite logits");
  Heads heads = compute_heads(tape, obs);
  return score_action(tape, heads, obs, action);
}

PolicyOutput FlatPolicy::forward(const Observation& obs) {
  Tape tape;
  Heads heads = compute_heads(tape, obs);
  PolicyOutput out;
  out.admission_probs = Eigen::VectorXd::Ones(dims_.num_slices);
  out.budget_logits = heads.budget_means.val();
  out.user_logits = heads.user_means.val();
  out.value = heads.value.scalar();
  out.cost_values = heads.cost_values.val().row(0);
  return out;
}

std::vector<ad::Param*> FlatPolicy::parameters() {
  std::vector<ad::Param*> out;
  h1_.collect(out);
  h2_.collect(out);
  budget_head_.collect(out);
  user_head_.collect(out);
  value_hidden_.collect(out);
  value_head_.collect(out);
  cost_head_.collect(out);
  out.push_back(&log_std_budget_);
  out.push_back(&log_std_user_);
  return out;
}

std::vector<ad::Param*> FlatPolicy::value_parameters() {
  std::vector<ad::Param*> out;
  value_hidden_.collect(out);
  value_head_.collect(out);
  cost_head_.collect(out);
  return out;
}

std::vector<ad::Param*> FlatPolicy::upper_parameters() {
  std::vector<ad::Param*> out;
  budget_head_.collect(out);
  out.push_back(&log_std_budget_);
  return out;
}

std::vector<ad::Param*> FlatPolicy::lower_parameters() {
  std::vector<ad::Param*> out;
  user_head_.collect(out);
  out.push_back(&log_std_user_);
  return out;
}

json FlatPolicy::hyperparams() const {
  return json{{"num_slices", dims_.num_slices},
              {"num_cells", dims_.num_cells},
              {"num_users", dims_.num_users},
              {"flat_dim", flat_dim_},
              {"hidden_dim", h1_.out_dim()},
              {"capacity", std::vector<double>{capacity_[0], capacity_[1], capacity_[2]}}};
}

// ---- serialization -----------------------------------------------------------

json policy_state_to_json(ActorCritic& policy) {
  return json{{"format", "slicesim-policy"},
              {"version", kPolicyFormatVersion},
              {"kind", policy.kind()},
              {"hyperparams", policy.hyperparams()},
              {"params", nn::params_to_json(policy.parameters())}};
}

void policy_state_from_json(ActorCritic& policy, const json& j) {
  if (j.value("format", "") != "slicesim-policy") {
    throw InputError("not a policy state blob");
  }
  if (j.value("version", -1) != kPolicyFormatVersion) {
    throw InputError("unsupported policy state version " + std::to_string(j.value("version", -1)) +
                     " (expected " + std::to_string(kPolicyFormatVersion) + ")");
  }
  if (j.value("kind", "") != policy.kind()) {
    throw InputError("policy kind mismatch: blob holds '" + j.value("kind", "") + "', model is '" +
                     policy.kind() + "'");
  }
  const json want = policy.hyperparams();
  if (j.at("hyperparams") != want) {
    throw InputError("policy hyperparameters/scenario dimensions mismatch: blob " +
                     j.at("hyperparams").dump() + " vs model " + want.dump());
  }
  nn::params_from_json(j.at("params"), policy.parameters());
}

std::unique_ptr<ActorCritic> make_actor_critic(const std::string& kind, const Scenario& scenario,
                                               const TrainConfig& cfg) {
  const PolicyDims dims = PolicyDims::of(scenario);
  if (kind == "hm_ppo") {
    return std::make_unique<SpatioTemporalPolicy>(dims, cfg, scenario.pool.capacity, cfg.seed);
  }
  if (kind == "standard_ppo") {
    return std::make_unique<FlatPolicy>(dims, flat_observation_dim(scenario), cfg,
                                        scenario.pool.capacity, cfg.seed);
  }
  throw ConfigError("unknown actor-critic kind: " + kind);
}

}  // namespace slicesim
