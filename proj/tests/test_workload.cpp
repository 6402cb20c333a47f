#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "elastic/workload.hpp"

using namespace elastic;

namespace {

std::vector<TraceRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

const std::string kHeader = std::string(kTraceHeader) + "\n";

std::int64_t parse_error_row(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.row();
  }
  return -1;
}

}  // namespace

TEST(ParseTrace, MapsFieldsDirectly) {
  const auto recs = parse(kHeader + "0,0,1.5,0.5,4,1,2\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0], (TraceRecord{0, 0, 1.5, 0.5, 4, 1, 2}));
}

TEST(ParseTrace, HeaderOnlyIsEmpty) {
  EXPECT_TRUE(parse(kHeader).empty());
  EXPECT_TRUE(parse(std::string(kTraceHeader)).empty());
}

TEST(ParseTrace, AcceptsCrlf) {
  const auto recs = parse(std::string(kTraceHeader) + "\r\n0,1,2,3,4,5,6\r\n1,0,1,1,1,1,0\r\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].arrival_step, 1);
}

TEST(ParseTrace, RejectsWithRowNumber) {
  EXPECT_EQ(parse_error_row(kHeader + "0,0,1,1,1,1,0\n1,0,1.5,0.5,0,1,2\n"), 3);  // duration 0
  EXPECT_EQ(parse_error_row(kHeader + "0,0,1,1,1,1\n"), 2);                      // missing column
  EXPECT_EQ(parse_error_row(kHeader + "0,0,abc,1,1,1,0\n"), 2);                  // non-numeric
  EXPECT_EQ(parse_error_row(kHeader + "0,-1,1,1,1,1,0\n"), 2);                   // negative tenant
  EXPECT_EQ(parse_error_row(kHeader + "0,0,1,1,1,1,-2\n"), 2);                   // negative sla
  EXPECT_EQ(parse_error_row(kHeader + "5,0,1,1,1,1,0\n4,0,1,1,1,1,0\n"), 3);     // unsorted
  EXPECT_EQ(parse_error_row(kHeader + "0,0,1,1,1,0,0\n"), 2);                    // priority 0
  EXPECT_EQ(parse_error_row(kHeader + "0,0,1,-1,1,1,0\n"), 2);                   // negative mem
  EXPECT_EQ(parse_error_row(kHeader + "0,0,1.5.1,1,1,1,0\n"), 2);
  EXPECT_EQ(parse_error_row("step,tenant\n"), 1);
  EXPECT_EQ(parse_error_row(""), 1);
}

TEST(Generate, ZeroRateIsEmpty) {
  SyntheticSpec s;
  s.base_rate = 0.0;
  s.horizon = 500;
  EXPECT_TRUE(generate(s).empty());
}

// Oracle: an independent Poisson sampler (std::poisson_distribution) fed from
// the same per-cell substreams. Both totals must sit within 3 sigma of 2000.
TEST(Generate, SteadyCountMatchesPoissonMean) {
  SyntheticSpec s;
  s.base_rate = 2.0;
  s.horizon = 1000;
  s.n_tenants = 1;
  s.seed = 1234;
  const auto recs = generate(s);
  const double sigma3 = 3.0 * std::sqrt(2000.0);
  EXPECT_NEAR(static_cast<double>(recs.size()), 2000.0, sigma3);

  std::uint64_t oracle_total = 0;
  for (std::int64_t step = 0; step < s.horizon; ++step) {
    std::mt19937_64 eng(splitmix64(derive_seed(s.seed, {static_cast<std::uint64_t>(step), 0})));
    std::poisson_distribution<int> pd(2.0);
    oracle_total += static_cast<std::uint64_t>(pd(eng));
  }
  EXPECT_NEAR(static_cast<double>(oracle_total), 2000.0, sigma3);
  EXPECT_NEAR(static_cast<double>(recs.size()), static_cast<double>(oracle_total), 2.0 * sigma3);
}

TEST(Generate, BurstWindowMultipliesRate) {
  double ratio_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SyntheticSpec s;
    s.kind = WorkloadKind::Burst;
    s.base_rate = 2.0;
    s.horizon = 300;
    s.burst = BurstWindow{100, 20, 5.0};
    s.seed = seed;
    double inside = 0.0;
    double outside = 0.0;
    for (const auto& r : generate(s)) (r.arrival_step >= 100 && r.arrival_step < 120 ? inside : outside) += 1.0;
    ratio_sum += (inside / 20.0) / (outside / 280.0);
  }
  const double ratio = ratio_sum / 50.0;
  EXPECT_GE(ratio, 4.0);
  EXPECT_LE(ratio, 6.0);
}

TEST(Generate, DiurnalFollowsSinusoid) {
  SyntheticSpec s;
  s.kind = WorkloadKind::Diurnal;
  s.base_rate = 1.0;
  s.horizon = 400;
  EXPECT_DOUBLE_EQ(arrival_rate(s, 0, 0), 1.0);
  EXPECT_NEAR(arrival_rate(s, 50, 0), 1.5, 1e-12);   // quarter period of 200
  EXPECT_NEAR(arrival_rate(s, 150, 0), 0.5, 1e-12);
}

TEST(Generate, SeedDeterminismAndDistinctness) {
  SyntheticSpec s;
  s.base_rate = 1.0;
  s.horizon = 100;
  s.n_tenants = 2;
  s.seed = 77;
  EXPECT_EQ(generate(s), generate(s));
  int distinct = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    SyntheticSpec a = s;
    SyntheticSpec b = s;
    a.seed = 2 * k;
    b.seed = 2 * k + 1;
    distinct += generate(a) != generate(b);
  }
  EXPECT_EQ(distinct, 100);
}

TEST(Generate, LongerHorizonKeepsEarlierArrivals) {
  SyntheticSpec s;
  s.base_rate = 1.5;
  s.horizon = 50;
  s.seed = 5;
  const auto short_run = generate(s);
  s.horizon = 120;
  auto long_run = generate(s);
  long_run.resize(short_run.size());
  EXPECT_EQ(short_run, long_run);
}

TEST(Generate, RecordsSatisfyInvariantsOverRandomSpecs) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    SyntheticSpec s;
    s.kind = static_cast<WorkloadKind>(rng.uniform_index(3));
    s.base_rate = rng.uniform(0.0, 4.0);
    s.horizon = 1 + static_cast<std::int64_t>(rng.uniform_index(200));
    s.n_tenants = 1 + static_cast<int>(rng.uniform_index(4));
    s.demand = {rng.uniform(0.1, 3.0), rng.uniform(0.0, 4.0), rng.uniform(0.1, 3.0),
                rng.uniform(0.0, 4.0), rng.uniform(1.0, 8.0), rng.uniform(0.0, 10.0)};
    if (s.kind == WorkloadKind::Burst)
      s.burst = BurstWindow{static_cast<std::int64_t>(rng.uniform_index(100)), 10, rng.uniform(1.0, 6.0)};
    s.seed = rng.next();
    const auto recs = generate(s);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      ASSERT_GE(r.arrival_step, 0);
      ASSERT_LT(r.arrival_step, s.horizon);
      ASSERT_GT(r.cpu_demand, 0.0);
      ASSERT_GT(r.mem_demand, 0.0);
      ASSERT_GT(r.duration, 0);
      ASSERT_GE(r.priority, 1);
      ASSERT_GE(r.sla_wait_limit, 0);
      ASSERT_LT(r.tenant_id, s.n_tenants);
      if (i > 0) ASSERT_GE(r.arrival_step, recs[i - 1].arrival_step);
    }
    // Export/parse round trip.
    std::stringstream io;
    export_trace(io, recs);
    ASSERT_EQ(parse_trace(io), recs);
  }
}

TEST(Generate, InvalidSpecRejected) {
  SyntheticSpec s;
  s.horizon = 0;
  EXPECT_THROW(generate(s), ConfigError);
  s.horizon = 10;
  s.kind = WorkloadKind::Burst;
  s.burst = BurstWindow{0, 5, 0.5};
  EXPECT_THROW(generate(s), ConfigError);
}

TEST(Schedule, GroupsByStepWithSequentialIds) {
  const std::vector<TraceRecord> recs{{0, 0, 1, 1, 1, 1, 0}, {0, 1, 1, 1, 1, 1, 0}, {2, 0, 1, 1, 1, 1, 0}, {9, 0, 1, 1, 1, 1, 0}};
  const auto sched = to_schedule(recs, 5);
  ASSERT_EQ(sched.size(), 5u);
  EXPECT_EQ(sched[0].size(), 2u);
  EXPECT_EQ(sched[1].size(), 0u);
  EXPECT_EQ(sched[2][0].id, 2);
}
