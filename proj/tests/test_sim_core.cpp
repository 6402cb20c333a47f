#include <gtest/gtest.h>

#include <vector>

#include "elastic/rng.hpp"
#include "elastic/sim_core.hpp"
#include "sim_check.hpp"

using namespace elastic;

namespace {

Task make_task(std::int64_t id, std::int64_t arrival, double cpu, double mem, std::int64_t dur, int tenant = 0,
               std::int64_t sla = 100) {
  Task t;
  t.id = id;
  t.arrival_step = arrival;
  t.cpu_demand = cpu;
  t.mem_demand = mem;
  t.duration = dur;
  t.tenant_id = tenant;
  t.sla_wait_limit = sla;
  return t;
}

ResourcePool make_pool(double cpu, double mem = 100.0, int id = 0) {
  return ResourcePool(id, CapacityBounds{1.0, 100.0, 1.0, 100.0}, cpu, mem);
}

}  // namespace

TEST(SimStep, AdmitsImmediatelyWhenCapacityAllows) {
  std::vector<ResourcePool> pools{make_pool(4.0)};
  const std::vector<Task> arrivals{make_task(0, 0, 2.0, 1.0, 3)};
  const auto snap = sim_step(pools, arrivals, 0);
  ASSERT_EQ(snap.pools.size(), 1u);
  EXPECT_DOUBLE_EQ(snap.pools[0].cpu_used, 2.0);
  EXPECT_EQ(snap.pools[0].queue_length, 0);
  EXPECT_EQ(pools[0].running().size(), 1u);
}

// Hand-simulated oracle. A (cpu 2, duration 3) enters at step 0 and still holds
// two remaining steps when B arrives at step 1:
//   step 1: B queued (wait 0), A remaining 2 -> 1
//   step 2: B queued (wait 1, not > 1), A completes
//   step 3: B admitted with wait 2 > 1 -> one violation
TEST(SimStep, LateAdmissionCountsOneViolation) {
  std::vector<ResourcePool> pools{make_pool(2.0)};
  sim_step(pools, std::vector<Task>{make_task(0, 0, 2.0, 1.0, 3)}, 0);

  const auto s1 = sim_step(pools, std::vector<Task>{make_task(1, 1, 2.0, 1.0, 1, 0, 1)}, 1);
  EXPECT_EQ(s1.pools[0].queue_length, 1);
  EXPECT_EQ(s1.pools[0].violated_this_step, 0);
  EXPECT_EQ(s1.pools[0].completed_this_step, 0);

  const auto s2 = sim_step(pools, {}, 2);
  EXPECT_EQ(s2.pools[0].completed_this_step, 1);
  EXPECT_EQ(s2.pools[0].violated_this_step, 0);
  EXPECT_EQ(s2.pools[0].queue_length, 1);

  const auto s3 = sim_step(pools, {}, 3);
  EXPECT_EQ(s3.pools[0].violated_this_step, 1);
  EXPECT_EQ(s3.pools[0].queue_length, 0);
  EXPECT_DOUBLE_EQ(s3.pools[0].cpu_used, 2.0);
  EXPECT_EQ(s3.pools[0].completed_this_step, 1);
  EXPECT_DOUBLE_EQ(s3.pools[0].mean_wait_this_step, 2.0);

  // Decided once: no further violation for B.
  const auto s4 = sim_step(pools, {}, 4);
  EXPECT_EQ(s4.pools[0].violated_this_step, 0);
}

TEST(SimStep, QueuedTaskViolatesOnceWhileWaiting) {
  std::vector<ResourcePool> pools{make_pool(1.0)};
  sim_step(pools, std::vector<Task>{make_task(0, 0, 1.0, 1.0, 10)}, 0);
  sim_step(pools, std::vector<Task>{make_task(1, 1, 1.0, 1.0, 1, 0, 2)}, 1);
  std::int64_t violations = 0;
  for (std::int64_t t = 2; t < 12; ++t) violations += sim_step(pools, {}, t).pools[0].violated_this_step;
  EXPECT_EQ(violations, 1);
}

TEST(SimStep, EmptySystemIsAFixedPoint) {
  std::vector<ResourcePool> pools{make_pool(5.0, 7.0)};
  const auto snap = sim_step(pools, {}, 0);
  const PoolRecord& r = snap.pools[0];
  EXPECT_EQ(r.cpu_used, 0.0);
  EXPECT_EQ(r.mem_used, 0.0);
  EXPECT_EQ(r.queue_length, 0);
  EXPECT_EQ(r.completed_this_step, 0);
  EXPECT_EQ(r.violated_this_step, 0);
  EXPECT_EQ(r.mean_wait_this_step, 0.0);
  EXPECT_EQ(r.cpu_capacity, 5.0);
  EXPECT_EQ(r.mem_capacity, 7.0);
}

TEST(SimStep, RejectsUnknownTenant) {
  std::vector<ResourcePool> pools{make_pool(4.0)};
  EXPECT_THROW(sim_step(pools, std::vector<Task>{make_task(0, 0, 1.0, 1.0, 1, 3)}, 0), InputError);
  const std::vector<int> map{0, 5};
  EXPECT_THROW(sim_step(pools, std::vector<Task>{make_task(0, 0, 1.0, 1.0, 1, 1)}, 0, map), InputError);
}

TEST(SimStep, RejectsNonPositiveDemand) {
  std::vector<ResourcePool> pools{make_pool(4.0)};
  EXPECT_THROW(sim_step(pools, std::vector<Task>{make_task(0, 0, 0.0, 1.0, 1)}, 0), InputError);
  EXPECT_THROW(sim_step(pools, std::vector<Task>{make_task(0, 0, 1.0, 1.0, 0)}, 0), InputError);
}

TEST(SimStep, TenantMapRoutesArrivals) {
  std::vector<ResourcePool> pools{make_pool(4.0, 100.0, 0), make_pool(4.0, 100.0, 1)};
  const std::vector<int> map{1, 1, 0};
  const auto snap = sim_step(pools, std::vector<Task>{make_task(0, 0, 1.0, 1.0, 2, 0), make_task(1, 0, 1.0, 1.0, 2, 2)}, 0, map);
  EXPECT_DOUBLE_EQ(snap.pools[0].cpu_used, 1.0);
  EXPECT_DOUBLE_EQ(snap.pools[1].cpu_used, 1.0);
  EXPECT_EQ(snap.pools[1].arrivals_this_step, 1);
}

TEST(AdmitFifo, HeadOfLineBlocking) {
  {
    auto pool = make_pool(2.0);
    pool.enqueue(make_task(0, 0, 1.0, 1.0, 1));
    pool.enqueue(make_task(1, 0, 3.0, 1.0, 1));
    EXPECT_EQ(admit_fifo(pool, 0), 1);
    EXPECT_EQ(pool.queue().size(), 1u);
    EXPECT_EQ(pool.queue().front().task.id, 1);
  }
  {
    auto pool = make_pool(2.0);
    pool.enqueue(make_task(0, 0, 3.0, 1.0, 1));
    pool.enqueue(make_task(1, 0, 1.0, 1.0, 1));
    EXPECT_EQ(admit_fifo(pool, 0), 0);
    EXPECT_EQ(pool.queue().size(), 2u);
  }
  {
    auto pool = make_pool(2.0);
    EXPECT_EQ(admit_fifo(pool, 0), 0);
  }
}

TEST(AdmitFifo, MemoryAlsoBlocks) {
  auto pool = make_pool(10.0, 2.0);
  pool.enqueue(make_task(0, 0, 1.0, 1.5, 1));
  pool.enqueue(make_task(1, 0, 1.0, 1.0, 1));
  EXPECT_EQ(admit_fifo(pool, 0), 1);
}

TEST(ResourcePool, ShrinkFloorsAtUsage) {
  auto pool = make_pool(10.0);
  pool.enqueue(make_task(0, 0, 8.0, 1.0, 5));
  admit_fifo(pool, 0);
  pool.set_capacity(6.0, 100.0);
  EXPECT_DOUBLE_EQ(pool.cpu_capacity(), 8.0);
  pool.set_capacity(500.0, 500.0);
  EXPECT_DOUBLE_EQ(pool.cpu_capacity(), 100.0);
  EXPECT_DOUBLE_EQ(pool.mem_capacity(), 100.0);
}

TEST(ResourcePool, EnqueueRejectsOutOfOrder) {
  auto pool = make_pool(1.0);
  pool.enqueue(make_task(5, 3, 1.0, 1.0, 1));
  EXPECT_THROW(pool.enqueue(make_task(4, 3, 1.0, 1.0, 1)), InputError);
  EXPECT_THROW(pool.enqueue(make_task(9, 2, 1.0, 1.0, 1)), InputError);
}

TEST(SimProperties, InvariantsHoldOnRandomScenarios) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto failure = elastic::testing::check_random_scenario(seed);
    EXPECT_FALSE(failure.has_value()) << "seed " << seed << ": " << failure.value_or("");
  }
}

TEST(SimProperties, Deterministic) {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ResourcePool> pools{make_pool(3.0, 3.0, 0), make_pool(5.0, 5.0, 1)};
    std::vector<ClusterSnapshot> snaps;
    std::int64_t id = 0;
    for (std::int64_t step = 0; step < 80; ++step) {
      std::vector<Task> arrivals;
      for (std::uint64_t k = rng.poisson(1.2); k > 0; --k)
        arrivals.push_back(make_task(id++, step, rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0),
                                     1 + static_cast<std::int64_t>(rng.uniform_index(5)),
                                     static_cast<int>(rng.uniform_index(2)), 2));
      snaps.push_back(sim_step(pools, arrivals, step));
    }
    return snaps;
  };
  EXPECT_EQ(run(9), run(9));
}
