#include <doctest.h>

#include "slicesim/env.hpp"
#include "test_support.hpp"

using namespace slicesim;
using namespace slicesim::testing;

namespace {

Scenario single_user_scenario(double lambda, double tau = 1000.0, double bound = 0.5) {
  Scenario sc;
  sc.name = "single";
  sc.dt = 1.0;
  sc.epsilon = 1e-6;
  sc.horizon = 10;
  sc.num_cells = 1;
  sc.pool.capacity << 1e8, 1e8, 1e8;
  SliceSpec spec;
  spec.id = "only";
  spec.delay_bound = bound;
  spec.min_throughput = 0.0;
  spec.reliability_target = 0.9;
  sc.slices = {spec};
  UserSession u;
  u.id = "u0";
  u.slice = 0;
  u.arrival_rate = lambda;
  u.packet_size = tau;
  u.compute_demand = 1.0;
  u.wireless_rate = 1e8;
  sc.users = {u};
  sc.finalize();
  return sc;
}

AllocationDecision admit_all_uniform(const Scenario& sc, double user_rate) {
  AllocationDecision d = AllocationDecision::zeros(sc.num_slices(), sc.num_users());
  d.admissions.setOnes();
  for (int u = 0; u < sc.num_users(); ++u) {
    for (int k = 0; k < kNumDomains; ++k) d.user_allocations(u, k) = user_rate;
  }
  for (int s = 0; s < sc.num_slices(); ++s) {
    for (int u : sc.slice_users[s]) d.slice_budgets.row(s) += d.user_allocations.row(u);
  }
  return d;
}

}  // namespace

TEST_CASE("aggregate_slice_usage sums the slice's users") {
  const Scenario sc = two_slice_scenario();
  AllocationDecision d = AllocationDecision::zeros(sc.num_slices(), sc.num_users());
  d.user_allocations(0, 0) = 3;
  d.user_allocations(1, 0) = 4;
  // user 2 belongs to the other slice
  d.user_allocations(2, 0) = 100;

  // slice 0 has users {0, 1}; manual sum 3 + 4.
  CHECK(aggregate_slice_usage(d, sc, 0, Domain::Radio) == doctest::Approx(7.0));

  SUBCASE("empty slice sums to zero") {
    AllocationDecision zeros = AllocationDecision::zeros(sc.num_slices(), sc.num_users());
    CHECK(aggregate_slice_usage(zeros, sc, 1, Domain::Bandwidth) == doctest::Approx(0.0));
  }

  SUBCASE("unknown slice is an error") {
    CHECK_THROWS_AS(aggregate_slice_usage(d, sc, 99, Domain::Radio), InputError);
    CHECK_THROWS_AS(aggregate_slice_usage(d, sc, -1, Domain::Radio), InputError);
  }
}

TEST_CASE("aggregate_slice_usage matches a brute-force oracle on random instances") {
  const Scenario sc = two_slice_scenario();
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const AllocationDecision d = random_decision(sc, rng);
    for (int s = 0; s < sc.num_slices(); ++s) {
      for (int k = 0; k < kNumDomains; ++k) {
        double oracle = 0.0;
        for (int u = 0; u < sc.num_users(); ++u) {
          if (sc.users[u].slice == s) oracle += d.user_allocations(u, k);
        }
        CHECK(aggregate_slice_usage(d, sc, s, static_cast<Domain>(k)) ==
              doctest::Approx(oracle).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("projection enforces every decision invariant") {
  const Scenario sc = two_slice_scenario();
  Rng rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    const AllocationDecision raw = random_decision(sc, rng, 2.5);
    ProjectionReport rep;
    const AllocationDecision proj = project_decision(raw, sc, &rep);

    for (int k = 0; k < kNumDomains; ++k) {
      CHECK(proj.slice_budgets.col(k).sum() <= sc.pool.capacity[k] * (1 + 1e-9));
      CHECK(rep.domain_scale[k] > 0);
      CHECK(rep.domain_scale[k] <= 1.0);
    }
    for (int s = 0; s < sc.num_slices(); ++s) {
      for (int k = 0; k < kNumDomains; ++k) {
        CHECK(aggregate_slice_usage(proj, sc, s, static_cast<Domain>(k)) <=
              proj.slice_budgets(s, k) * (1 + 1e-9) + 1e-12);
      }
      if (raw.admissions[s] == 0) {
        CHECK(proj.slice_budgets.row(s).sum() == doctest::Approx(0.0));
        for (int u : sc.slice_users[s]) {
          CHECK(proj.user_allocations.row(u).sum() == doctest::Approx(0.0));
        }
      }
    }
    CHECK(proj.user_allocations.minCoeff() >= 0.0);
  }
}

TEST_CASE("step: amply served user ends with empty queue and no delay violation") {
  // Single-queue hand simulation: rate 2x arrivals, zero initial backlog =>
  // served = offered, backlog' = 0.
  const Scenario sc = single_user_scenario(1e6);
  SliceEnv env(sc, constant_trace(sc, 1.0));
  const auto out = env.step(admit_all_uniform(sc, 2e6));

  CHECK(out.records[0].served_bits == doctest::Approx(1e6));
  CHECK(env.state().backlog[0] == doctest::Approx(0.0));
  CHECK_FALSE(out.records[0].delay_violation);
  CHECK(out.costs[static_cast<int>(Constraint::DelayViolation)] == doctest::Approx(0.0));
}

TEST_CASE("step: starved user accumulates exactly its arrivals") {
  const Scenario sc = single_user_scenario(2.5e6);
  SliceEnv env(sc, constant_trace(sc, 1.0));
  const auto out = env.step(admit_all_uniform(sc, 0.0));

  CHECK(out.served_bits == doctest::Approx(0.0));
  CHECK(env.state().backlog[0] == doctest::Approx(2.5e6 * sc.dt));
  CHECK(out.records[0].delay_violation);
  CHECK(out.records[0].reliability == doctest::Approx(0.0));
}

TEST_CASE("step: empty action reads as fully violated") {
  const Scenario sc = two_slice_scenario();
  SliceEnv env(sc, constant_trace(sc, 1.0));
  AllocationDecision nothing = AllocationDecision::zeros(sc.num_slices(), sc.num_users());
  const auto out = env.step(nothing);

  CHECK(out.served_bits == doctest::Approx(0.0));
  for (int k = 0; k < kNumConstraints; ++k) {
    CHECK(out.costs[k] == doctest::Approx(1.0));
  }
}

TEST_CASE("queue conservation holds on every step for random actions") {
  const Scenario sc = two_slice_scenario();
  SliceEnv env(sc, constant_trace(sc, 0.9));
  Rng rng(23);
  for (int t = 0; t < 40; ++t) {
    Eigen::VectorXd before = env.state().backlog;
    Eigen::VectorXd lambda_eff(sc.num_users());
    for (int u = 0; u < sc.num_users(); ++u) lambda_eff[u] = env.effective_arrival(u);

    const auto out = env.step(random_decision(sc, rng));
    for (int u = 0; u < sc.num_users(); ++u) {
      const double delta = env.state().backlog[u] - before[u];
      CHECK(delta == doctest::Approx(lambda_eff[u] * sc.dt - out.records[u].served_bits)
                         .epsilon(1e-9));
      CHECK(env.state().backlog[u] >= 0.0);
    }
    if (env.done()) break;
  }
}

TEST_CASE("history window stays bounded and carries slice rows") {
  const Scenario sc = two_slice_scenario();
  SliceEnv env(sc, constant_trace(sc, 1.0), 4);
  Rng rng(24);
  for (int t = 0; t < 10; ++t) {
    env.step(random_decision(sc, rng));
    CHECK(static_cast<int>(env.state().history.size()) <= 4);
    CHECK(env.state().history.back().rows() == sc.num_slices());
    CHECK(env.state().history.back().cols() == kHistFeatureDim);
  }
}

TEST_CASE("decision shape mismatches are rejected") {
  const Scenario sc = two_slice_scenario();
  AllocationDecision bad = AllocationDecision::zeros(sc.num_slices() + 1, sc.num_users());
  CHECK_THROWS_AS(project_decision(bad, sc), InputError);
}
