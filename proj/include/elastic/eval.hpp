#pragma once

// Metrics over per-step logs, baseline controllers, and the three scenario
// families: comparative, multi-tenant isolation, burst robustness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "elastic/action.hpp"
#include "elastic/env.hpp"
#include "elastic/errors.hpp"
#include "elastic/marl.hpp"
#include "elastic/workload.hpp"
#include "json.hpp"

namespace elastic {

struct StepLogRow {
  std::int64_t step = 0;
  int pool_id = 0;
  double cpu_used = 0.0;
  double cpu_capacity = 0.0;
  double mem_used = 0.0;
  double mem_capacity = 0.0;
  std::int64_t queue_len = 0;
  std::int64_t completed = 0;
  std::int64_t violated = 0;
  double mean_wait = 0.0;
  int action = 0;
  double delta_R = 0.0;

  bool operator==(const StepLogRow&) const = default;
};

using StepLog = std::vector<StepLogRow>;

inline constexpr std::string_view kStepLogHeader =
    "step,pool_id,cpu_used,cpu_capacity,mem_used,mem_capacity,queue_len,completed,violated,mean_wait,action,delta_R";

inline void write_step_log(std::ostream& out, const StepLog& log) {
  out << kStepLogHeader << '\n';
  for (const auto& r : log)
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.step, r.pool_id, r.cpu_used, r.cpu_capacity,
                       r.mem_used, r.mem_capacity, r.queue_len, r.completed, r.violated, r.mean_wait, r.action,
                       r.delta_R);
}

inline StepLog read_step_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  detail::strip_cr(line);
  if (line != kStepLogHeader) throw ParseError(1, "unexpected step-log header");
  StepLog log;
  std::int64_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 12) throw ParseError(row, "expected 12 columns");
    StepLogRow r;
    r.step = detail::parse_number<std::int64_t>(f[0], row, "step");
    r.pool_id = detail::parse_number<int>(f[1], row, "pool_id");
    r.cpu_used = detail::parse_number<double>(f[2], row, "cpu_used");
    r.cpu_capacity = detail::parse_number<double>(f[3], row, "cpu_capacity");
    r.mem_used = detail::parse_number<double>(f[4], row, "mem_used");
    r.mem_capacity = detail::parse_number<double>(f[5], row, "mem_capacity");
    r.queue_len = detail::parse_number<std::int64_t>(f[6], row, "queue_len");
    r.completed = detail::parse_number<std::int64_t>(f[7], row, "completed");
    r.violated = detail::parse_number<std::int64_t>(f[8], row, "violated");
    r.mean_wait = detail::parse_number<double>(f[9], row, "mean_wait");
    r.action = detail::parse_number<int>(f[10], row, "action");
    r.delta_R = detail::parse_number<double>(f[11], row, "delta_R");
    log.push_back(r);
  }
  return log;
}

// Mean over steps and pools of cpu_used / cpu_capacity.
inline double avg_cpu_utilization(const StepLog& log) {
  if (log.empty()) throw MetricError("avg_cpu_utilization: empty log");
  double s = 0.0;
  for (const auto& r : log) s += r.cpu_used / r.cpu_capacity;
  return s / static_cast<double>(log.size());
}

// Violated tasks over finished-or-violated tasks. Completions include tasks that
// were flagged and still ran, so the union is bounded below by
// max(completed, violated); that bound is the denominator.
inline double sla_violation_rate(const StepLog& log) {
  std::int64_t completed = 0;
  std::int64_t violated = 0;
  for (const auto& r : log) {
    completed += r.completed;
    violated += r.violated;
  }
  const std::int64_t denom = std::max(completed, violated);
  if (denom == 0) throw MetricError("sla_violation_rate: no completed or violated tasks");
  return static_cast<double>(violated) / static_cast<double>(denom);
}

// Mean over steps and pools of idle capacity beyond one scaling quantum.
inline double over_provisioning(const StepLog& log, double cpu_step) {
  if (log.empty()) throw MetricError("over_provisioning: empty log");
  double s = 0.0;
  for (const auto& r : log) s += std::max(0.0, r.cpu_capacity - r.cpu_used - cpu_step) / r.cpu_capacity;
  return s / static_cast<double>(log.size());
}

// Mean queueing wait over tenant j's completed tasks (0 when none completed).
inline double mean_wait(const StepLog& log, int tenant) {
  double weighted = 0.0;
  std::int64_t n = 0;
  for (const auto& r : log) {
    if (r.pool_id != tenant) continue;
    weighted += r.mean_wait * static_cast<double>(r.completed);
    n += r.completed;
  }
  return n > 0 ? weighted / static_cast<double>(n) : 0.0;
}

inline constexpr double kIsolationWaitFloor = 0.5;

inline void require_matched(const StepLog& a, const StepLog& b) {
  if (a.size() != b.size()) throw InputError("runs are not matched: different log lengths");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].step != b[i].step || a[i].pool_id != b[i].pool_id)
      throw InputError("runs are not matched: step/pool layout differs");
}

// 1 - clamp((W_with - W_without) / max(W_without, 0.5), 0, 1) for tenant j.
inline double isolation_index(const StepLog& with_aggressor, const StepLog& without_aggressor, int tenant) {
  require_matched(with_aggressor, without_aggressor);
  const double w_with = mean_wait(with_aggressor, tenant);
  const double w_without = mean_wait(without_aggressor, tenant);
  const double degradation = (w_with - w_without) / std::max(w_without, kIsolationWaitFloor);
  return 1.0 - std::min(1.0, std::max(0.0, degradation));
}

// Population variance of tenant j's per-step mean waits over steps with completions.
inline double latency_variance(const StepLog& log, int tenant) {
  std::vector<double> xs;
  for (const auto& r : log)
    if (r.pool_id == tenant && r.completed > 0) xs.push_back(r.mean_wait);
  if (xs.size() < 2) throw MetricError(fmt::format("latency_variance: tenant {} has fewer than 2 data points", tenant));
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return var / static_cast<double>(xs.size());
}

inline constexpr double kRobustnessEpsilon = 1e-6;

// Retained SLA satisfaction under burst, clamped to [0, 1].
// No degradation scores 1 even when the nominal run already violates everything.
inline double robustness_score(double nominal_violation_rate, double burst_violation_rate) {
  if (burst_violation_rate <= nominal_violation_rate) return 1.0;
  const double score = (1.0 - burst_violation_rate) / std::max(1.0 - nominal_violation_rate, kRobustnessEpsilon);
  return std::clamp(score, 0.0, 1.0);
}

enum class BaselineKind { Static, Threshold };

struct BaselinePolicy {
  BaselineKind kind = BaselineKind::Threshold;
  double lower = 0.3;
  double upper = 0.8;

  void validate() const {
    if (!(lower >= 0.0 && lower < upper && upper <= 1.0))
      throw ConfigError("threshold baseline needs 0 <= lower < upper <= 1");
  }
};

inline ActionChoice baseline_act(const BaselinePolicy& policy, const StateVec& obs) {
  if (policy.kind == BaselineKind::Static) return ActionChoice::Hold;
  if (obs.cpu_utilization > policy.upper) return ActionChoice::ScaleUp;
  if (obs.cpu_utilization < policy.lower) return ActionChoice::ScaleDown;
  return ActionChoice::Hold;
}

// Anything that maps local observations to a joint action, with optional
// capacity overrides for the run's starting point.
struct PolicyHandle {
  std::string id;
  std::function<std::vector<ActionChoice>(std::span<const StateVec>)> act;
  std::optional<double> initial_cpu{};
  std::optional<double> initial_mem{};
};

inline PolicyHandle baseline_handle(std::string id, const BaselinePolicy& b) {
  b.validate();
  return {std::move(id), [b](std::span<const StateVec> obs) {
            std::vector<ActionChoice> out;
            out.reserve(obs.size());
            for (const auto& o : obs) out.push_back(baseline_act(b, o));
            return out;
          }};
}

// Greedy (epsilon = 0) decentralized execution of trained policies.
inline PolicyHandle trained_handle(std::string id, std::vector<AgentPolicy> policies) {
  return {std::move(id), [p = std::move(policies)](std::span<const StateVec> obs) {
            if (obs.size() != p.size()) throw ConfigError("trained policy agent count does not match the environment");
            std::vector<ActionChoice> out;
            out.reserve(obs.size());
            for (std::size_t i = 0; i < obs.size(); ++i) out.push_back(greedy_action(p[i], obs[i]));
            return out;
          }};
}

struct RunTrace {
  StepLog log;
  std::vector<std::vector<State3>> observed;  // [agent][t], including the initial observation
  std::vector<std::vector<double>> exogenous;
};

inline RunTrace run_episode(EnvConfig cfg, const std::optional<PredictorModel>& predictor,
                            const ArrivalSchedule& schedule, const PolicyHandle& policy) {
  if (policy.initial_cpu) cfg.initial_cpu = *policy.initial_cpu;
  if (policy.initial_mem) cfg.initial_mem = *policy.initial_mem;
  Environment env(cfg, predictor);
  RunTrace trace;
  const auto n = static_cast<std::size_t>(cfg.n_agents);
  trace.observed.resize(n);
  trace.exogenous.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    trace.observed[i].push_back(env.observations()[i].observed());
    trace.exogenous[i].push_back(0.0);
  }
  while (!env.done()) {
    const auto actions = policy.act(env.observations());
    const StepResult sr = env.step(actions, arrivals_at(schedule, env.steps_taken()));
    for (std::size_t i = 0; i < n; ++i) {
      const PoolRecord& p = sr.snapshot.pools[i];
      trace.log.push_back({sr.snapshot.step, static_cast<int>(i), p.cpu_used, p.cpu_capacity, p.mem_used,
                           p.mem_capacity, p.queue_length, p.completed_this_step, p.violated_this_step,
                           p.mean_wait_this_step, to_numeric(actions[i]), sr.delta_R});
      trace.observed[i].push_back(sr.transition.next_state[i].observed());
      trace.exogenous[i].push_back(
          std::clamp(static_cast<double>(p.arrivals_this_step) / cfg.predictor.rate_cap, 0.0, 1.0));
    }
  }
  return trace;
}

enum class ScenarioKind { Comparative, Isolation, Burst };

inline std::string_view scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Comparative: return "comparative";
    case ScenarioKind::Isolation: return "isolation";
    case ScenarioKind::Burst: return "burst";
  }
  return "?";
}

inline ScenarioKind parse_scenario_kind(std::string_view s) {
  if (s == "comparative") return ScenarioKind::Comparative;
  if (s == "isolation") return ScenarioKind::Isolation;
  if (s == "burst") return ScenarioKind::Burst;
  throw ConfigError(fmt::format("unknown scenario '{}' (valid: comparative, isolation, burst)", s));
}

using WorkloadSource = std::variant<SyntheticSpec, std::vector<TraceRecord>>;

struct ScenarioSpec {
  std::string id = "scenario";
  ScenarioKind kind = ScenarioKind::Comparative;
  EnvConfig env{};
  WorkloadSource workload{SyntheticSpec{}};
  std::vector<std::uint64_t> seeds{0};
  int aggressor = 0;
  double aggressor_multiplier = 4.0;
  std::vector<double> burst_levels{2.0, 4.0, 8.0};
  double burst_fraction = 0.1;
  double burst_start_fraction = 0.45;

  void validate() const {
    env.validate();
    if (seeds.empty()) throw ConfigError("scenario needs at least one seed");
    if (const auto* s = std::get_if<SyntheticSpec>(&workload)) {
      s->validate();
      if (s->n_tenants != env.n_agents) throw ConfigError("workload.n_tenants must equal env.n_agents");
    }
    if (kind == ScenarioKind::Isolation) {
      if (!std::holds_alternative<SyntheticSpec>(workload)) throw ConfigError("isolation scenario needs a synthetic workload");
      if (aggressor < 0 || aggressor >= env.n_agents) throw ConfigError("scenario.aggressor must name a tenant");
      if (env.n_agents < 2) throw ConfigError("isolation scenario needs at least two tenants");
      if (!(aggressor_multiplier >= 1.0)) throw ConfigError("scenario.aggressor_multiplier must be >= 1");
    }
    if (kind == ScenarioKind::Burst) {
      const auto* s = std::get_if<SyntheticSpec>(&workload);
      if (!s) throw ConfigError("burst scenario needs a synthetic workload");
      if (s->kind == WorkloadKind::Diurnal) throw ConfigError("burst scenario needs a steady base workload");
      if (burst_levels.empty()) throw ConfigError("scenario.burst_levels must not be empty");
      for (double l : burst_levels)
        if (!(l >= 1.0)) throw ConfigError("scenario.burst_levels entries must be >= 1");
      if (!(burst_fraction > 0.0 && burst_fraction <= 1.0)) throw ConfigError("scenario.burst_fraction must lie in (0, 1]");
      if (!(burst_start_fraction >= 0.0 && burst_start_fraction < 1.0))
        throw ConfigError("scenario.burst_start_fraction must lie in [0, 1)");
    }
  }
};

struct MetricsReport {
  std::string scenario;
  std::string policy;
  std::uint64_t seed = 0;
  double avg_cpu_utilization = 0.0;
  double sla_violation_rate = 0.0;
  double over_provisioning = 0.0;
  std::map<int, double> isolation_index;
  std::map<int, double> latency_variance;
  std::optional<double> robustness_score;
  std::vector<std::pair<double, double>> robustness_by_level;  // (multiplier, score)
};

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["scenario"] = r.scenario;
  j["policy"] = r.policy;
  j["seed"] = r.seed;
  j["avg_cpu_utilization"] = r.avg_cpu_utilization;
  j["sla_violation_rate"] = r.sla_violation_rate;
  j["over_provisioning"] = r.over_provisioning;
  j["isolation_index"] = nlohmann::json::object();
  for (const auto& [t, v] : r.isolation_index) j["isolation_index"][std::to_string(t)] = v;
  j["latency_variance"] = nlohmann::json::object();
  for (const auto& [t, v] : r.latency_variance) j["latency_variance"][std::to_string(t)] = v;
  j["robustness_score"] = r.robustness_score ? nlohmann::json(*r.robustness_score) : nlohmann::json(nullptr);
  j["robustness_by_level"] = nlohmann::json::array();
  for (const auto& [m, s] : r.robustness_by_level) j["robustness_by_level"].push_back({{"multiplier", m}, {"score", s}});
  return j;
}

struct NamedLog {
  std::string name;
  StepLog log;
};

struct ScenarioRun {
  MetricsReport report;
  std::vector<NamedLog> logs;
};

inline std::vector<TraceRecord> scenario_records(const ScenarioSpec& spec, std::uint64_t seed,
                                                 const std::function<void(SyntheticSpec&)>& tweak = {}) {
  if (const auto* s = std::get_if<SyntheticSpec>(&spec.workload)) {
    SyntheticSpec w = *s;
    w.seed = seed;
    w.horizon = spec.env.episode_length;
    if (tweak) tweak(w);
    return generate(w);
  }
  return std::get<std::vector<TraceRecord>>(spec.workload);
}

// Every applicable metric for one seed. Isolation runs the matched
// with/without-aggressor pair; burst runs nominal plus one run per level.
inline ScenarioRun run_scenario(const ScenarioSpec& spec, const PolicyHandle& policy, std::uint64_t seed,
                                const std::optional<PredictorModel>& predictor = std::nullopt) {
  spec.validate();
  const std::int64_t horizon = spec.env.episode_length;
  auto run = [&](const std::vector<TraceRecord>& records) {
    return run_episode(spec.env, predictor, to_schedule(records, horizon), policy).log;
  };
  auto fill_core = [&](MetricsReport& rep, const StepLog& log) {
    rep.avg_cpu_utilization = avg_cpu_utilization(log);
    rep.sla_violation_rate = sla_violation_rate(log);
    rep.over_provisioning = over_provisioning(log, spec.env.cpu_step);
  };

  ScenarioRun out;
  out.report.scenario = std::string(scenario_kind_name(spec.kind)) + ":" + spec.id;
  out.report.policy = policy.id;
  out.report.seed = seed;

  switch (spec.kind) {
    case ScenarioKind::Comparative: {
      StepLog log = run(scenario_records(spec, seed));
      fill_core(out.report, log);
      for (int t = 0; t < spec.env.n_agents; ++t) {
        try {
          out.report.latency_variance[t] = latency_variance(log, t);
        } catch (const MetricError&) {
        }
      }
      out.logs.push_back({"main", std::move(log)});
      break;
    }
    case ScenarioKind::Isolation: {
      StepLog without = run(scenario_records(spec, seed));
      StepLog with = run(scenario_records(spec, seed, [&](SyntheticSpec& w) {
        if (w.tenant_rate_multiplier.empty()) w.tenant_rate_multiplier.assign(static_cast<std::size_t>(w.n_tenants), 1.0);
        w.tenant_rate_multiplier[static_cast<std::size_t>(spec.aggressor)] *= spec.aggressor_multiplier;
      }));
      fill_core(out.report, with);
      for (int t = 0; t < spec.env.n_agents; ++t) {
        if (t != spec.aggressor) out.report.isolation_index[t] = isolation_index(with, without, t);
        try {
          out.report.latency_variance[t] = latency_variance(with, t);
        } catch (const MetricError&) {
        }
      }
      out.logs.push_back({"without_aggressor", std::move(without)});
      out.logs.push_back({"with_aggressor", std::move(with)});
      break;
    }
    case ScenarioKind::Burst: {
      StepLog nominal = run(scenario_records(spec, seed, [](SyntheticSpec& w) {
        w.kind = WorkloadKind::Steady;
        w.burst.reset();
      }));
      fill_core(out.report, nominal);
      const double nominal_rate = out.report.sla_violation_rate;
      const auto length = std::max<std::int64_t>(1, std::llround(spec.burst_fraction * static_cast<double>(horizon)));
      const auto start = static_cast<std::int64_t>(std::llround(spec.burst_start_fraction * static_cast<double>(horizon)));
      double worst = 1.0;
      for (double level : spec.burst_levels) {
        StepLog burst = run(scenario_records(spec, seed, [&](SyntheticSpec& w) {
          w.kind = WorkloadKind::Burst;
          w.burst = BurstWindow{start, length, level};
        }));
        const double score = robustness_score(nominal_rate, sla_violation_rate(burst));
        out.report.robustness_by_level.emplace_back(level, score);
        worst = std::min(worst, score);
        out.logs.push_back({fmt::format("burst_x{}", level), std::move(burst)});
      }
      out.report.robustness_score = worst;
      out.logs.insert(out.logs.begin(), NamedLog{"nominal", std::move(nominal)});
      break;
    }
  }
  return out;
}

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

inline MetricSummary summarize(std::span<const double> xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(xs.size()));
  return s;
}

// Mean and population stddev of every scalar metric across per-seed reports.
inline nlohmann::json aggregate_reports(std::span<const MetricsReport> reports) {
  nlohmann::json j;
  if (reports.empty()) return j;
  j["scenario"] = reports.front().scenario;
  j["policy"] = reports.front().policy;
  j["seeds"] = nlohmann::json::array();
  for (const auto& r : reports) j["seeds"].push_back(r.seed);

  auto add = [&](const std::string& name, const std::function<std::optional<double>(const MetricsReport&)>& get) {
    std::vector<double> xs;
    for (const auto& r : reports)
      if (auto v = get(r)) xs.push_back(*v);
    if (xs.empty()) return;
    const auto s = summarize(xs);
    j["metrics"][name] = {{"mean", s.mean}, {"stddev", s.stddev}, {"n", xs.size()}};
  };
  add("avg_cpu_utilization", [](const MetricsReport& r) { return std::optional<double>(r.avg_cpu_utilization); });
  add("sla_violation_rate", [](const MetricsReport& r) { return std::optional<double>(r.sla_violation_rate); });
  add("over_provisioning", [](const MetricsReport& r) { return std::optional<double>(r.over_provisioning); });
  add("robustness_score", [](const MetricsReport& r) { return r.robustness_score; });

  std::map<int, bool> tenants;
  for (const auto& r : reports) {
    for (const auto& kv : r.isolation_index) tenants[kv.first] = true;
    for (const auto& kv : r.latency_variance) tenants[kv.first] = true;
  }
  for (const auto& [t, unused] : tenants) {
    add(fmt::format("isolation_index.{}", t), [t = t](const MetricsReport& r) -> std::optional<double> {
      auto it = r.isolation_index.find(t);
      return it == r.isolation_index.end() ? std::nullopt : std::optional<double>(it->second);
    });
    add(fmt::format("latency_variance.{}", t), [t = t](const MetricsReport& r) -> std::optional<double> {
      auto it = r.latency_variance.find(t);
      return it == r.latency_variance.end() ? std::nullopt : std::optional<double>(it->second);
    });
  }
  std::map<double, std::vector<double>> levels;
  for (const auto& r : reports)
    for (const auto& [m, s] : r.robustness_by_level) levels[m].push_back(s);
  for (const auto& [m, xs] : levels) {
    const auto s = summarize(xs);
    j["metrics"][fmt::format("robustness_x{}", m)] = {{"mean", s.mean}, {"stddev", s.stddev}, {"n", xs.size()}};
  }
  j["per_seed"] = nlohmann::json::array();
  for (const auto& r : reports) j["per_seed"].push_back(to_json(r));
  return j;
}

}  // namespace elastic
