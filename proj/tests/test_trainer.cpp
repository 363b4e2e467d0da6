#include <doctest.h>

#include <fstream>
#include <sstream>

#include "slicesim/baselines.hpp"
#include "slicesim/trainer.hpp"
#include "test_support.hpp"

using namespace slicesim;
using namespace slicesim::testing;

namespace {

TrainConfig tiny_train(long total_steps = 256) {
  TrainConfig cfg;
  cfg.embed_dim = 16;
  cfg.gat_heads = 2;
  cfg.lstm_hidden = 4;
  cfg.history_window = 3;
  cfg.hidden_dim = 32;
  cfg.rollout = 64;
  cfg.minibatch = 32;
  cfg.epochs = 2;
  cfg.total_steps = total_steps;
  cfg.train_loads = {0.6, 0.9};
  cfg.seed = 3;
  return cfg;
}

std::string metrics_to_string(const std::vector<IterationMetrics>& ms) {
  std::ostringstream os;
  for (const auto& m : ms) os << m.to_json().dump() << "\n";
  return os.str();
}

}  // namespace

TEST_CASE("compute_gae matches the definitional cases") {
  SUBCASE("single step") {
    Eigen::VectorXd r(1), v(1);
    r << 1.0;
    v << 0.0;
    auto [adv, ret] = compute_gae(r, v, {0}, 0.0, 0.99, 0.95);
    CHECK(adv[0] == doctest::Approx(1.0));
    CHECK(ret[0] == doctest::Approx(1.0));
  }
  SUBCASE("three ones with beta 0.5 and lambda 1") {
    Eigen::VectorXd r = Eigen::VectorXd::Ones(3);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
    auto [adv, ret] = compute_gae(r, v, {0, 0, 0}, 0.0, 0.5, 1.0);
    CHECK(adv[0] == doctest::Approx(1.75));
    CHECK(adv[1] == doctest::Approx(1.5));
    CHECK(adv[2] == doctest::Approx(1.0));
  }
  SUBCASE("lambda 0 collapses to the TD error") {
    Rng rng(71);
    const int T = 20;
    Eigen::VectorXd r(T), v(T);
    std::vector<char> dones(T, 0);
    for (int t = 0; t < T; ++t) {
      r[t] = rng.uniform(-1, 1);
      v[t] = rng.uniform(-1, 1);
      dones[t] = rng.uniform() < 0.15 ? 1 : 0;
    }
    const double bootstrap = rng.uniform(-1, 1);
    auto [adv, ret] = compute_gae(r, v, dones, bootstrap, 0.9, 0.0);
    for (int t = 0; t < T; ++t) {
      const double next_v = t + 1 < T ? v[t + 1] : bootstrap;
      const double delta = r[t] + 0.9 * next_v * (dones[t] ? 0.0 : 1.0) - v[t];
      CHECK(adv[t] == doctest::Approx(delta).epsilon(1e-12));
    }
  }
  SUBCASE("length mismatch is an error") {
    Eigen::VectorXd r(3), v(2);
    CHECK_THROWS_AS(compute_gae(r, v, {0, 0, 0}, 0.0, 0.9, 0.9), InputError);
  }
}

TEST_CASE("GAE with lambda 1 and zero values equals discounted reward-to-go") {
  Rng rng(72);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 3 + rng.uniform_int(40);
    const double beta = rng.uniform(0.5, 1.0);
    Eigen::VectorXd r(T);
    for (int t = 0; t < T; ++t) r[t] = rng.uniform(-2, 2);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(T);
    std::vector<char> dones(T, 0);

    auto [adv, ret] = compute_gae(r, v, dones, 0.0, beta, 1.0);

    // brute-force discounted sums
    for (int t = 0; t < T; ++t) {
      double expect = 0.0, d = 1.0;
      for (int k = t; k < T; ++k) {
        expect += d * r[k];
        d *= beta;
      }
      CHECK(adv[t] == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
      CHECK(ret[t] == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("ppo_clip_loss branch behavior") {
  CHECK(ppo_clip_loss(2.0, 1.0, 0.2) == doctest::Approx(-1.2));
  CHECK(ppo_clip_loss(0.5, -1.0, 0.2) == doctest::Approx(0.8));

  Rng rng(73);
  for (int trial = 0; trial < 500; ++trial) {
    const double A = rng.uniform(-3, 3);
    const double eps = rng.uniform(0.05, 0.5);
    CHECK(ppo_clip_loss(1.0, A, eps) == doctest::Approx(-A));
  }
}

TEST_CASE("first-epoch single-minibatch ratios stay at one") {
  const Scenario sc = two_slice_scenario();
  TrainConfig cfg = tiny_train(64);
  cfg.epochs = 1;
  cfg.minibatch = cfg.rollout;  // one minibatch -> no update before any ratio
  Trainer trainer(sc, cfg, TrafficConfig{}, "hm_ppo");
  const auto metrics = trainer.train_iterations(1);
  REQUIRE(metrics.size() == 1);
  CHECK(metrics[0].mean_abs_ratio_gap < 1e-5);
}

TEST_CASE("zero learning rates leave parameters bit-identical") {
  const Scenario sc = two_slice_scenario();
  TrainConfig cfg = tiny_train(64);
  cfg.lr_policy = 0.0;
  cfg.lr_value = 0.0;
  Trainer trainer(sc, cfg, TrafficConfig{}, "hm_ppo");

  std::vector<ad::Mat> before;
  for (ad::Param* p : trainer.policy().parameters()) before.push_back(p->value);
  trainer.train_iterations(1);
  size_t i = 0;
  for (ad::Param* p : trainer.policy().parameters()) {
    CHECK((p->value - before[i]).cwiseAbs().maxCoeff() == 0.0);
    ++i;
  }
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  const Scenario sc = two_slice_scenario();
  const TrainConfig cfg = tiny_train(128);
  Trainer a(sc, cfg, TrafficConfig{}, "hm_ppo");
  Trainer b(sc, cfg, TrafficConfig{}, "hm_ppo");
  CHECK(metrics_to_string(a.train_iterations(2)) == metrics_to_string(b.train_iterations(2)));
}

TEST_CASE("duals stay nonnegative and appear in metrics") {
  const Scenario sc = two_slice_scenario();
  Trainer trainer(sc, tiny_train(128), TrafficConfig{}, "hm_ppo");
  const auto metrics = trainer.train_iterations(2);
  for (const auto& m : metrics) {
    CHECK(m.multipliers.minCoeff() >= 0.0);
    CHECK(m.mean_costs.size() == kNumConstraints);
  }
  CHECK(trainer.constraints().multipliers.minCoeff() >= 0.0);
}

TEST_CASE("standard_ppo disables shaping, duals, and adaptive weights") {
  const Scenario sc = two_slice_scenario();
  Trainer trainer(sc, tiny_train(64), TrafficConfig{}, "standard_ppo");
  CHECK_FALSE(trainer.config().use_shaping);
  CHECK_FALSE(trainer.config().use_duals);
  CHECK_FALSE(trainer.config().use_adaptive_weights);

  const auto metrics = trainer.train_iterations(1);
  // fixed equal weights, shaped == base
  for (int o = 0; o < kNumObjectives; ++o) {
    CHECK(metrics[0].mean_weights[o] == doctest::Approx(0.2));
  }
  CHECK(metrics[0].mean_reward_shaped == doctest::Approx(metrics[0].mean_reward_base));
  CHECK(metrics[0].multipliers.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoint round-trip continues the exact metric stream") {
  const Scenario sc = two_slice_scenario();
  const TrainConfig cfg = tiny_train(1024);
  const std::string dir = temp_dir("trainer_ckpt");

  Trainer uninterrupted(sc, cfg, TrafficConfig{}, "hm_ppo");
  auto full = uninterrupted.train_iterations(4);

  Trainer first(sc, cfg, TrafficConfig{}, "hm_ppo");
  auto head = first.train_iterations(2);
  first.save_checkpoint(dir + "/ckpt.json");

  Trainer resumed = Trainer::load_checkpoint(dir + "/ckpt.json");
  CHECK(resumed.iteration() == 2);
  auto tail = resumed.train_iterations(2);

  std::vector<IterationMetrics> stitched = head;
  stitched.insert(stitched.end(), tail.begin(), tail.end());
  CHECK(metrics_to_string(stitched) == metrics_to_string(full));
}

TEST_CASE("checkpoint integrity and compatibility gates") {
  const Scenario sc = two_slice_scenario();
  const std::string dir = temp_dir("trainer_gates");
  Trainer trainer(sc, tiny_train(64), TrafficConfig{}, "hm_ppo");
  trainer.train_iterations(1);
  const std::string path = dir + "/ckpt.json";
  trainer.save_checkpoint(path);

  SUBCASE("corrupt file refuses to load") {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    const auto pos = text.find("0.");  // flip some parameter digit
    REQUIRE(pos != std::string::npos);
    text[pos + 2] = text[pos + 2] == '1' ? '2' : '1';
    std::ofstream out(path);
    out << text;
    out.close();
    CHECK_THROWS_AS(Trainer::load_checkpoint(path), InputError);
  }
  SUBCASE("version mismatch refuses to load") {
    json j = load_json_file(path);
    j["version"] = 41;
    json payload = j;
    payload.erase("integrity");
    j["integrity"] = to_hex(fnv1a64(payload.dump()));
    write_text_file(path, j.dump());
    CHECK_THROWS_AS(Trainer::load_checkpoint(path), InputError);
  }
  SUBCASE("scenario dimension mismatch is a clear error") {
    Scenario bigger = sc;
    UserSession extra = bigger.users.back();
    extra.id = "extra-user";
    bigger.users.push_back(extra);
    bigger.finalize();
    try {
      Trainer::load_checkpoint(path, bigger);
      FAIL("expected dimension error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("users") != std::string::npos);
    }
  }
}

TEST_CASE("divergence guard aborts with a diagnostic") {
  const Scenario sc = two_slice_scenario();
  TrainConfig cfg = tiny_train(64);
  cfg.divergence_guard = 1e-12;  // any finite update trips it
  cfg.epochs = 3;
  Trainer trainer(sc, cfg, TrafficConfig{}, "hm_ppo");
  try {
    trainer.train_iterations(1);
    FAIL("expected divergence abort");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}

TEST_CASE("toy scenario: delay violations reach zero within 50 iterations") {
  // One slice, two users, capacity far above demand. The trivially feasible
  // allocation exists: the greedy baseline reaches zero violations in one
  // step, which pins the target the trainer must also reach.
  Scenario sc;
  sc.name = "toy";
  sc.dt = 1.0;
  sc.epsilon = 1e-6;
  sc.horizon = 32;
  sc.num_cells = 1;
  sc.pool.capacity << 4e7, 4e7, 4e7;
  SliceSpec spec;
  spec.id = "only";
  spec.delay_bound = 0.2;
  spec.min_throughput = 1e6;
  spec.reliability_target = 0.5;
  spec.priority = 1.0;
  sc.slices = {spec};
  for (int u = 0; u < 2; ++u) {
    UserSession user;
    user.id = "u" + std::to_string(u);
    user.slice = 0;
    user.cell = 0;
    user.arrival_rate = 2e6;
    user.packet_size = 4000;
    user.compute_demand = 1.0;
    user.wireless_rate = 4e7;
    sc.users.push_back(user);
  }
  sc.finalize();

  // Greedy oracle: satisfiable immediately.
  SliceEnv env(sc, constant_trace(sc, 1.0));
  const auto greedy_out =
      env.step(greedy_allocate(sc, env.state().load_multiplier, env.state().backlog));
  CHECK(greedy_out.costs[static_cast<int>(Constraint::DelayViolation)] == doctest::Approx(0.0));

  TrainConfig cfg = tiny_train();
  cfg.rollout = 128;
  cfg.minibatch = 64;
  cfg.epochs = 3;
  cfg.train_loads = {1.0};
  cfg.total_steps = 50L * cfg.rollout;
  Trainer trainer(sc, cfg, TrafficConfig{}, "hm_ppo");

  bool reached_zero = false;
  for (int iter = 0; iter < 50 && !reached_zero; ++iter) {
    const auto m = trainer.train_iterations(1);
    if (m[0].mean_costs[static_cast<int>(Constraint::DelayViolation)] <= 1e-9) {
      reached_zero = true;
    }
  }
  CHECK(reached_zero);
}
