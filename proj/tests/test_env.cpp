#include <gtest/gtest.h>

#include <vector>

#include "elastic/env.hpp"
#include "elastic/rng.hpp"

using namespace elastic;

namespace {

ClusterSnapshot one_pool(std::int64_t step, double cpu_used, double cpu_cap, double mem_used, double mem_cap,
                         std::int64_t queue, std::int64_t violated = 0) {
  ClusterSnapshot s;
  s.step = step;
  PoolRecord r;
  r.cpu_used = cpu_used;
  r.cpu_capacity = cpu_cap;
  r.mem_used = mem_used;
  r.mem_capacity = mem_cap;
  r.queue_length = queue;
  r.violated_this_step = violated;
  s.pools.push_back(r);
  return s;
}

EnvConfig small_config() {
  EnvConfig c;
  c.n_agents = 2;
  c.episode_length = 5;
  c.bounds = CapacityBounds{1.0, 20.0, 1.0, 20.0};
  c.initial_cpu = 10.0;
  c.initial_mem = 10.0;
  return c;
}

Task task(std::int64_t id, std::int64_t step, int tenant, double cpu, std::int64_t dur) {
  Task t;
  t.id = id;
  t.arrival_step = step;
  t.tenant_id = tenant;
  t.cpu_demand = cpu;
  t.mem_demand = cpu;
  t.duration = dur;
  t.sla_wait_limit = 1;
  return t;
}

}  // namespace

TEST(Observe, Examples) {
  const auto s = observe(one_pool(0, 50, 100, 30, 60, 5), 0, std::nullopt, 20);
  EXPECT_EQ(s.observed(), (State3{0.5, 0.5, 0.25}));
  EXPECT_FALSE(s.predicted_next.has_value());

  EXPECT_EQ(observe(one_pool(0, 0, 10, 0, 10, 0), 0, std::nullopt, 20).observed(), (State3{0.0, 0.0, 0.0}));
  EXPECT_EQ(observe(one_pool(0, 0, 10, 0, 10, 50), 0, std::nullopt, 20).queue_length_norm, 1.0);
}

TEST(Observe, ClampsPredictionAndChecksInputs) {
  const auto s = observe(one_pool(0, 1, 2, 1, 2, 0), 0, State3{1.4, -0.3, 0.6}, 20);
  EXPECT_EQ(*s.predicted_next, (State3{1.0, 0.0, 0.6}));
  const auto f = s.features();
  EXPECT_EQ(f[3], 1.0);
  EXPECT_THROW(observe(one_pool(0, 1, 2, 1, 2, 0), 1, std::nullopt, 20), InputError);
  EXPECT_THROW(observe(one_pool(0, 0, 0, 1, 2, 0), 0, std::nullopt, 20), InvariantError);
}

TEST(Reward, Examples) {
  EnvConfig cfg;
  cfg.w_util = 1.0;
  cfg.w_sla = 1.0;
  cfg.w_over = 0.5;
  const auto prev = one_pool(0, 0, 10, 0, 10, 0);
  EXPECT_NEAR(reward(prev, one_pool(1, 8, 10, 0, 10, 0), 0, cfg), 0.7, 1e-12);
  EXPECT_NEAR(reward(prev, one_pool(1, 0, 10, 0, 10, 0), 0, cfg), -0.5, 1e-12);
  EXPECT_NEAR(reward(prev, one_pool(1, 9, 10, 0, 10, 0, 2), 0, cfg), -1.15, 1e-12);
  EXPECT_THROW(reward(prev, one_pool(3, 0, 10, 0, 10, 0), 0, cfg), InputError);
}

TEST(EnvStep, IdleHoldIsFixedPoint) {
  Environment env(small_config());
  const std::vector<ActionChoice> hold{ActionChoice::Hold, ActionChoice::Hold};
  const auto r = env.step(hold, {});
  for (double v : r.transition.rewards) EXPECT_DOUBLE_EQ(v, -0.5);
  for (const auto& p : r.snapshot.pools) EXPECT_DOUBLE_EQ(p.cpu_capacity, 10.0);
  EXPECT_EQ(r.delta_R, 0.0);
}

TEST(EnvStep, ScaleUpChangesCapacityByStep) {
  auto cfg = small_config();
  cfg.cpu_step = 2.0;
  Environment env(cfg);
  const std::vector<ActionChoice> joint{ActionChoice::ScaleUp, ActionChoice::Hold};
  const auto r = env.step(joint, {});
  EXPECT_DOUBLE_EQ(r.snapshot.pools[0].cpu_capacity, 12.0);
  EXPECT_DOUBLE_EQ(env.pools()[0].cpu_capacity(), 12.0);
  EXPECT_DOUBLE_EQ(env.pools()[1].cpu_capacity(), 10.0);
}

TEST(EnvStep, TerminalBoundary) {
  Environment env(small_config());
  const std::vector<ActionChoice> hold{ActionChoice::Hold, ActionChoice::Hold};
  for (int i = 0; i < 5; ++i) {
    const auto r = env.step(hold, {});
    EXPECT_EQ(r.transition.terminal, i == 4);
  }
  EXPECT_THROW(env.step(hold, {}), ProtocolError);
  env.reset();
  EXPECT_NO_THROW(env.step(hold, {}));
}

TEST(EnvStep, WrongActionCount) {
  Environment env(small_config());
  EXPECT_THROW(env.step(std::vector<ActionChoice>{ActionChoice::Hold}, {}), InputError);
}

TEST(EnvStep, TransitionShapes) {
  Environment env(small_config());
  const std::vector<ActionChoice> hold{ActionChoice::Hold, ActionChoice::ScaleDown};
  const auto r = env.step(hold, std::vector<Task>{task(0, 0, 1, 2.0, 3)});
  EXPECT_EQ(r.transition.state.size(), 2u);
  EXPECT_EQ(r.transition.next_state.size(), 2u);
  EXPECT_EQ(r.transition.rewards.size(), 2u);
  EXPECT_EQ(global_state(r.transition.next_state).size(), 6u);
  EXPECT_NEAR(r.transition.next_state[1].cpu_utilization, 2.0 / 9.0, 1e-12);
}

namespace {

std::vector<Transition> random_episode(std::uint64_t seed, const EnvConfig& cfg) {
  Rng rng(seed);
  Environment env(cfg);
  std::vector<Transition> out;
  std::int64_t id = 0;
  while (!env.done()) {
    std::vector<Task> arrivals;
    for (std::uint64_t k = rng.poisson(2.0); k > 0; --k)
      arrivals.push_back(task(id++, env.steps_taken(), static_cast<int>(rng.uniform_index(2)), rng.uniform(0.5, 4.0),
                              1 + static_cast<std::int64_t>(rng.uniform_index(6))));
    std::vector<ActionChoice> joint(2);
    for (auto& a : joint) a = action_from_index(static_cast<int>(rng.uniform_index(3)));
    out.push_back(env.step(joint, arrivals).transition);
  }
  return out;
}

}  // namespace

TEST(EnvProperties, RewardBoundedAndObservationsInRange) {
  auto cfg = small_config();
  cfg.episode_length = 100;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& tr : random_episode(seed, cfg)) {
      for (double r : tr.rewards) {
        ASSERT_LE(r, cfg.w_util + 1e-12);
        ASSERT_GE(r, -cfg.w_sla * 1000.0 - cfg.w_over);
        ASSERT_TRUE(std::isfinite(r));
      }
      for (const auto& s : tr.next_state)
        for (double v : s.features()) {
          ASSERT_GE(v, 0.0);
          ASSERT_LE(v, 1.0);
        }
    }
  }
}

TEST(EnvProperties, EpisodeDeterminism) {
  auto cfg = small_config();
  cfg.episode_length = 60;
  const auto a = random_episode(3, cfg);
  const auto b = random_episode(3, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].state, b[i].state);
    EXPECT_EQ(a[i].joint_action, b[i].joint_action);
    EXPECT_EQ(a[i].rewards, b[i].rewards);
    EXPECT_EQ(a[i].next_state, b[i].next_state);
  }
}

TEST(EnvProperties, ObserveIsPure) {
  const auto snap = one_pool(4, 3, 7, 2, 9, 11);
  EXPECT_EQ(observe(snap, 0, State3{0.2, 0.3, 0.4}, 50), observe(snap, 0, State3{0.2, 0.3, 0.4}, 50));
}

TEST(EnvPredictor, ColdStartUsesPersistenceThenModel) {
  auto cfg = small_config();
  cfg.n_agents = 1;
  cfg.episode_length = 10;
  PredictorModel m;
  m.k = 3;
  for (auto& w : m.weights) w.assign(m.feature_count(), 0.0);
  m.bias = {0.25, 0.5, 0.75};
  Environment env(cfg, m);
  const std::vector<ActionChoice> hold{ActionChoice::Hold};
  env.step(hold, std::vector<Task>{task(0, 0, 0, 4.0, 20)});
  EXPECT_EQ(*env.observations()[0].predicted_next, env.observations()[0].observed());
  env.step(hold, {});
  env.step(hold, {});
  EXPECT_EQ(*env.observations()[0].predicted_next, (State3{0.25, 0.5, 0.75}));
}

TEST(PredictorSamples, WindowAlignment) {
  const std::vector<State3> states{{0.0, 0, 0}, {0.1, 0, 0}, {0.2, 0, 0}, {0.3, 0, 0}};
  const std::vector<double> x{0.5, 0.6, 0.7, 0.8};
  const auto s = make_predictor_samples(states, x, 2);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].window[0][0], 0.0);
  EXPECT_EQ(s[0].window[1][0], 0.1);
  EXPECT_EQ(s[0].exogenous, 0.6);
  EXPECT_EQ(s[0].next[0], 0.2);
  EXPECT_EQ(s[1].next[0], 0.3);
}
