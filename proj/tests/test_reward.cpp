#include <doctest.h>

#include "slicesim/reward.hpp"
#include "slicesim/service_model.hpp"
#include "test_support.hpp"

using namespace slicesim;
using namespace slicesim::testing;

namespace {

// Builds a StepOutcome whose records exactly meet every target of the
// two-slice test scenario.
StepOutcome exactly_met_outcome(const Scenario& sc) {
  StepOutcome out;
  out.projection.domain_scale = Eigen::VectorXd::Ones(kNumDomains);
  out.projection.slice_scale = Eigen::MatrixXd::Ones(sc.num_slices(), kNumDomains);
  out.slice_served_rate = Eigen::VectorXd::Zero(sc.num_slices());
  out.slice_target_rate = Eigen::VectorXd::Zero(sc.num_slices());
  for (int u = 0; u < sc.num_users(); ++u) {
    const auto& spec = sc.slices[sc.users[u].slice];
    QoSRecord rec;
    rec.user = u;
    rec.achieved_rate = spec.min_throughput;
    rec.delay = spec.delay_bound;
    rec.reliability = 1.0;
    out.records.push_back(rec);
    out.slice_served_rate[sc.users[u].slice] += spec.min_throughput;
    out.slice_target_rate[sc.users[u].slice] += spec.min_throughput;
  }
  return out;
}

}  // namespace

TEST_CASE("objective_vector: all targets exactly met yields all-ones utilities") {
  Scenario sc = two_slice_scenario();
  // The all-ones boundary requires reliability targets met at 1.0 exactly.
  for (auto& spec : sc.slices) spec.reliability_target = 1.0;
  const auto objv = objective_vector(exactly_met_outcome(sc), sc);
  for (int o = 0; o < kNumObjectives; ++o) {
    CHECK(objv.u[o] == doctest::Approx(1.0));
    CHECK(objv.v[o] == doctest::Approx(0.0));
  }
}

TEST_CASE("objective_vector: fairness follows the Jain index of normalized throughputs") {
  const Scenario sc = two_slice_scenario();
  StepOutcome out = exactly_met_outcome(sc);
  // Serve slice 0 at 100% of target and slice 1 at 50% -> Jain of (1, 0.5).
  out.slice_served_rate[1] *= 0.5;
  const auto objv = objective_vector(out, sc);
  Eigen::Vector2d x(1.0, 0.5);
  CHECK(objv.u[3] == doctest::Approx(jain_index(x)));
}

TEST_CASE("objective_vector: empty records are an error") {
  const Scenario sc = two_slice_scenario();
  StepOutcome out;
  out.projection.domain_scale = Eigen::VectorXd::Ones(kNumDomains);
  CHECK_THROWS_AS(objective_vector(out, sc), InputError);
}

TEST_CASE("adaptive_weights: uniform cases") {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(kNumObjectives, 0.4);
  const auto w_equal = adaptive_weights(v, 2.0);
  for (int o = 0; o < kNumObjectives; ++o) CHECK(w_equal[o] == doctest::Approx(0.2));

  Eigen::VectorXd v2(kNumObjectives);
  v2 << 0.9, 0.1, 0.5, 0.3, 0.7;
  const auto w_zero_kappa = adaptive_weights(v2, 0.0);
  for (int o = 0; o < kNumObjectives; ++o) CHECK(w_zero_kappa[o] == doctest::Approx(0.2));
}

TEST_CASE("adaptive_weights: numeric softmax evaluation") {
  Eigen::VectorXd v(kNumObjectives);
  v << 1, 0, 0, 0, 0;
  const auto w = adaptive_weights(v, 2.0);
  const double e2 = std::exp(2.0);
  CHECK(w[0] == doctest::Approx(e2 / (e2 + 4.0)));
  CHECK(w[0] == doctest::Approx(0.6488).epsilon(1e-3));
  for (int o = 1; o < kNumObjectives; ++o) {
    CHECK(w[o] == doctest::Approx(1.0 / (e2 + 4.0)));
    CHECK(w[o] == doctest::Approx(0.0878).epsilon(1e-2));
  }
}

TEST_CASE("adaptive_weights: simplex and argmax-tracking properties") {
  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd v(kNumObjectives);
    for (int o = 0; o < kNumObjectives; ++o) v[o] = rng.uniform();
    const double kappa = rng.uniform(0.1, 8.0);
    const auto w = adaptive_weights(v, kappa);

    CHECK(std::abs(w.sum() - 1.0) <= 1e-9);
    CHECK(w.minCoeff() >= 0.0);

    int argmax_v = 0, argmax_w = 0;
    v.maxCoeff(&argmax_v);
    w.maxCoeff(&argmax_w);
    bool unique = true;
    for (int o = 0; o < kNumObjectives; ++o) {
      if (o != argmax_v && std::abs(v[o] - v[argmax_v]) < 1e-12) unique = false;
    }
    if (unique) CHECK(argmax_v == argmax_w);
  }
}

TEST_CASE("base_reward is the weighted utility") {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(kNumObjectives);
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(kNumObjectives);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(kNumObjectives, 0.2);
  CHECK(base_reward(ones, w) == doctest::Approx(1.0));
  CHECK(base_reward(zeros, w) == doctest::Approx(0.0));

  Eigen::VectorXd u(kNumObjectives);
  u << 1, 0, 0, 0, 0;
  Eigen::VectorXd v = u;
  const auto w2 = adaptive_weights(v, 2.0);
  CHECK(base_reward(u, w2) == doctest::Approx(w2[0]));

  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::VectorXd uu(kNumObjectives), vv(kNumObjectives);
    for (int o = 0; o < kNumObjectives; ++o) {
      uu[o] = rng.uniform();
      vv[o] = rng.uniform();
    }
    const double r = base_reward(uu, adaptive_weights(vv, rng.uniform(0, 5)));
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("shaped_reward substitution cases") {
  CHECK(shaped_reward(0.37, 0.5, 0.5, 1.0) == doctest::Approx(0.37));
  CHECK(shaped_reward(0.0, 0.0, 1.0, 0.99) == doctest::Approx(0.99));
}

TEST_CASE("shaping telescopes over random trajectories") {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 10;
    const double beta = rng.uniform(0.9, 1.0);
    std::vector<double> phi(T + 1);
    for (auto& p : phi) p = rng.uniform();

    // direct discounted summation of the shaping terms
    double total = 0.0, discount = 1.0;
    for (int t = 0; t < T; ++t) {
      total += discount * (shaped_reward(0.0, phi[t], phi[t + 1], beta));
      discount *= beta;
    }
    const double closed_form = std::pow(beta, T) * phi[T] - phi[0];
    CHECK(total == doctest::Approx(closed_form).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("penalized_reward substitution and oracle") {
  Eigen::VectorXd zero_l = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd c(3);
  c << 0.3, 0.9, 0.1;
  CHECK(penalized_reward(0.8, c, zero_l) == doctest::Approx(0.8));

  Eigen::Vector2d l2(1.0, 0.0), c2(0.3, 0.9);
  CHECK(penalized_reward(1.0, c2, l2) == doctest::Approx(0.7));

  Rng rng(44);
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::VectorXd lam(4), cc(4);
    for (int k = 0; k < 4; ++k) {
      lam[k] = rng.uniform(0, 2);
      cc[k] = rng.uniform();
    }
    double dot = 0.0;
    for (int k = 0; k < 4; ++k) dot += lam[k] * cc[k];
    CHECK(penalized_reward(0.5, cc, lam) == doctest::Approx(0.5 - dot).epsilon(1e-12));
  }
}

TEST_CASE("dual_update moves multipliers toward violation and clips at zero") {
  Eigen::Vector3d bounds(0.05, 0.05, 0.02);
  ConstraintState st = ConstraintState::init(bounds, 1.0);

  SUBCASE("zero gradient at the bound") {
    st.multipliers << 0.3, 0.3, 0.3;
    const auto next = dual_update(st, bounds);
    CHECK((next.multipliers - st.multipliers).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("projection at zero") {
    st.multipliers << 0.5, 0.5, 0.5;
    Eigen::Vector3d J = bounds.array() - 1.0;
    const auto next = dual_update(st, J);
    CHECK(next.multipliers.maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("ascent step") {
    st.eta = 0.1;
    st.multipliers << 0.2, 0.0, 0.0;
    Eigen::Vector3d J = bounds;
    J[0] += 0.3;
    const auto next = dual_update(st, J);
    CHECK(next.multipliers[0] == doctest::Approx(0.23));
  }
  SUBCASE("nonnegative under any update sequence") {
    Rng rng(45);
    ConstraintState s = ConstraintState::init(bounds, 0.5);
    for (int step = 0; step < 1000; ++step) {
      Eigen::Vector3d J(rng.uniform(), rng.uniform(), rng.uniform());
      s = dual_update(s, J);
      CHECK(s.multipliers.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("shaping potential is the mean slice margin") {
  const Scenario sc = two_slice_scenario();
  SliceEnv env(sc, constant_trace(sc, 1.0));
  CHECK(shaping_potential(env.state()) == doctest::Approx(0.0));  // episode start

  Rng rng(46);
  env.step(random_decision(sc, rng));
  const double phi = shaping_potential(env.state());
  CHECK(phi >= 0.0);
  CHECK(phi <= 1.0);
  CHECK(phi == doctest::Approx(env.state().slice_margins.mean()));
}
