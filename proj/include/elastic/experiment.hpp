#pragma once

// Experiment configuration and the train / evaluate / replay / report commands.
// Output layout per run: <output_dir>/<run_id>/{manifest.json, checkpoint/,
// curve.csv, steps/*.csv, report.json}.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "elastic/env.hpp"
#include "elastic/errors.hpp"
#include "elastic/eval.hpp"
#include "elastic/marl.hpp"
#include "elastic/predict.hpp"
#include "elastic/workload.hpp"
#include "json.hpp"

namespace elastic {

using nlohmann::json;

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitDivergence = 3 };

// Every recognised field with its default. User documents are merged over this.
inline json default_config_json() {
  return json::parse(R"({
    "run_id": "run",
    "output_dir": "out",
    "seed": 7,
    "env": {
      "n_agents": 2,
      "gamma": 0.95,
      "episode_length": 200,
      "queue_norm_cap": 50,
      "w_util": 1.0,
      "w_sla": 1.0,
      "w_over": 0.5,
      "cpu_step": 1.0,
      "mem_step": 1.0,
      "cpu_min": 1.0,
      "cpu_max": 16.0,
      "mem_min": 1.0,
      "mem_max": 16.0,
      "initial_cpu": 3.0,
      "initial_mem": 3.0,
      "agent_priority": [],
      "predictor": {"enabled": true, "k": 5, "lambda": 0.001, "rate_cap": 10.0, "warmup_episodes": 4}
    },
    "train": {
      "episodes": 300,
      "epsilon_start": 1.0,
      "epsilon_end": 0.05,
      "epsilon_decay_episodes": -1,
      "batch_size": 64,
      "buffer_capacity": 50000,
      "actor_lr": 0.001,
      "critic_lr": 0.001,
      "target_sync": 200,
      "joint_max": "enumerate",
      "critic_scope": "central",
      "hidden": [32, 32],
      "warmup_transitions": 0
    },
    "workload": {
      "trace": null,
      "kind": "steady",
      "base_rate": 1.0,
      "n_tenants": 2,
      "cpu_mean": 1.0, "cpu_spread": 0.5,
      "mem_mean": 1.0, "mem_spread": 0.5,
      "dur_mean": 4.0, "dur_spread": 2.0,
      "burst": null,
      "tenant_rate_multiplier": [],
      "tenant_priority": [],
      "sla_wait_limit": 3
    },
    "scenario": {
      "kind": "comparative",
      "seeds": [1001, 1002, 1003, 1004, 1005],
      "aggressor": 0,
      "aggressor_multiplier": 4.0,
      "burst_levels": [2.0, 4.0, 8.0],
      "burst_fraction": 0.1,
      "burst_start_fraction": 0.45,
      "threshold": {"lower": 0.3, "upper": 0.8}
    }
  })");
}

namespace detail {

// Rejects keys the defaults do not know about; objects recurse.
inline void check_known(const json& user, const json& defaults, const std::string& path) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!defaults.contains(it.key())) throw ConfigError(fmt::format("unknown config field '{}'", key));
    const json& d = defaults.at(it.key());
    if (d.is_object() && it.value().is_object()) check_known(it.value(), d, key);
  }
}

template <typename T>
T field(const json& j, const char* section, const char* name) {
  try {
    return j.at(section).at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config field '{}.{}' is missing or has the wrong type", section, name));
  }
}

template <typename T>
T top_field(const json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config field '{}' is missing or has the wrong type", name));
  }
}

}  // namespace detail

// `--a.b.c value` style overrides. Values parse as JSON when they can, else as strings.
inline void apply_override(json& cfg, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw ConfigError("empty override key");
  std::string pointer;
  std::stringstream ss(dotted_key);
  std::string part;
  while (std::getline(ss, part, '.')) pointer += "/" + part;
  const json::json_pointer ptr(pointer);
  const json defaults = default_config_json();
  if (!defaults.contains(ptr)) throw ConfigError(fmt::format("unknown config field '{}'", dotted_key));
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  cfg[ptr] = parsed;
}

struct ExperimentConfig {
  json raw;  // fully resolved document (defaults + file + overrides)
  std::string run_id;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  EnvConfig env;
  TrainConfig train;
  WorkloadSource workload;
  ScenarioSpec scenario;
  BaselinePolicy threshold;
};

inline ExperimentConfig parse_experiment(const json& resolved, const std::filesystem::path& base_dir = {}) {
  detail::check_known(resolved, default_config_json(), "");
  ExperimentConfig c;
  c.raw = resolved;
  c.run_id = detail::top_field<std::string>(resolved, "run_id");
  if (c.run_id.empty() || c.run_id.find('/') != std::string::npos) throw ConfigError("run_id must be a plain name");
  c.output_dir = detail::top_field<std::string>(resolved, "output_dir");
  c.seed = detail::top_field<std::uint64_t>(resolved, "seed");

  EnvConfig& e = c.env;
  e.n_agents = detail::field<int>(resolved, "env", "n_agents");
  e.gamma = detail::field<double>(resolved, "env", "gamma");
  e.episode_length = detail::field<std::int64_t>(resolved, "env", "episode_length");
  e.queue_norm_cap = detail::field<int>(resolved, "env", "queue_norm_cap");
  e.w_util = detail::field<double>(resolved, "env", "w_util");
  e.w_sla = detail::field<double>(resolved, "env", "w_sla");
  e.w_over = detail::field<double>(resolved, "env", "w_over");
  e.cpu_step = detail::field<double>(resolved, "env", "cpu_step");
  e.mem_step = detail::field<double>(resolved, "env", "mem_step");
  e.bounds.cpu_min = detail::field<double>(resolved, "env", "cpu_min");
  e.bounds.cpu_max = detail::field<double>(resolved, "env", "cpu_max");
  e.bounds.mem_min = detail::field<double>(resolved, "env", "mem_min");
  e.bounds.mem_max = detail::field<double>(resolved, "env", "mem_max");
  e.initial_cpu = detail::field<double>(resolved, "env", "initial_cpu");
  e.initial_mem = detail::field<double>(resolved, "env", "initial_mem");
  e.agent_priority = detail::field<std::vector<int>>(resolved, "env", "agent_priority");
  {
    const json& p = resolved.at("env").at("predictor");
    try {
      e.predictor.enabled = p.at("enabled").get<bool>();
      e.predictor.k = p.at("k").get<int>();
      e.predictor.lambda = p.at("lambda").get<double>();
      e.predictor.rate_cap = p.at("rate_cap").get<double>();
      e.predictor.warmup_episodes = p.at("warmup_episodes").get<int>();
    } catch (const json::exception&) {
      throw ConfigError("config section 'env.predictor' has a missing or mistyped field");
    }
  }
  e.validate();

  TrainConfig& t = c.train;
  t.episodes = detail::field<std::int64_t>(resolved, "train", "episodes");
  t.epsilon_start = detail::field<double>(resolved, "train", "epsilon_start");
  t.epsilon_end = detail::field<double>(resolved, "train", "epsilon_end");
  t.epsilon_decay_episodes = detail::field<std::int64_t>(resolved, "train", "epsilon_decay_episodes");
  t.batch_size = detail::field<std::size_t>(resolved, "train", "batch_size");
  t.buffer_capacity = detail::field<std::size_t>(resolved, "train", "buffer_capacity");
  t.actor_lr = detail::field<double>(resolved, "train", "actor_lr");
  t.critic_lr = detail::field<double>(resolved, "train", "critic_lr");
  t.target_sync = detail::field<std::int64_t>(resolved, "train", "target_sync");
  t.joint_max = parse_joint_max(detail::field<std::string>(resolved, "train", "joint_max"));
  t.critic_scope = parse_critic_scope(detail::field<std::string>(resolved, "train", "critic_scope"));
  t.hidden = detail::field<std::vector<std::size_t>>(resolved, "train", "hidden");
  t.warmup_transitions = detail::field<std::size_t>(resolved, "train", "warmup_transitions");
  t.seed = c.seed;
  t.validate(e.n_agents);

  const json& w = resolved.at("workload");
  if (!w.at("trace").is_null()) {
    std::filesystem::path trace = w.at("trace").get<std::string>();
    if (trace.is_relative() && !base_dir.empty()) trace = base_dir / trace;
    std::ifstream in(trace);
    if (!in) throw ConfigError("workload.trace: cannot open " + trace.string());
    try {
      c.workload = parse_trace(in);
    } catch (const ParseError& err) {
      throw ConfigError(fmt::format("workload.trace {}: {}", trace.string(), err.what()));
    }
  } else {
    SyntheticSpec s;
    s.kind = parse_workload_kind(detail::field<std::string>(resolved, "workload", "kind"));
    s.base_rate = detail::field<double>(resolved, "workload", "base_rate");
    s.horizon = e.episode_length;
    s.n_tenants = detail::field<int>(resolved, "workload", "n_tenants");
    s.demand.cpu_mean = detail::field<double>(resolved, "workload", "cpu_mean");
    s.demand.cpu_spread = detail::field<double>(resolved, "workload", "cpu_spread");
    s.demand.mem_mean = detail::field<double>(resolved, "workload", "mem_mean");
    s.demand.mem_spread = detail::field<double>(resolved, "workload", "mem_spread");
    s.demand.dur_mean = detail::field<double>(resolved, "workload", "dur_mean");
    s.demand.dur_spread = detail::field<double>(resolved, "workload", "dur_spread");
    if (!w.at("burst").is_null()) {
      try {
        const json& b = w.at("burst");
        s.burst = BurstWindow{b.at("start_step").get<std::int64_t>(), b.at("length").get<std::int64_t>(),
                              b.at("multiplier").get<double>()};
      } catch (const json::exception&) {
        throw ConfigError("workload.burst needs start_step, length and multiplier");
      }
    }
    s.tenant_rate_multiplier = detail::field<std::vector<double>>(resolved, "workload", "tenant_rate_multiplier");
    s.tenant_priority = detail::field<std::vector<int>>(resolved, "workload", "tenant_priority");
    s.sla_wait_limit = detail::field<std::int64_t>(resolved, "workload", "sla_wait_limit");
    s.seed = c.seed;
    s.validate();
    if (s.n_tenants != e.n_agents) throw ConfigError("workload.n_tenants must equal env.n_agents");
    c.workload = s;
  }

  ScenarioSpec& sc = c.scenario;
  sc.id = c.run_id;
  sc.kind = parse_scenario_kind(detail::field<std::string>(resolved, "scenario", "kind"));
  sc.env = e;
  sc.workload = c.workload;
  sc.seeds = detail::field<std::vector<std::uint64_t>>(resolved, "scenario", "seeds");
  sc.aggressor = detail::field<int>(resolved, "scenario", "aggressor");
  sc.aggressor_multiplier = detail::field<double>(resolved, "scenario", "aggressor_multiplier");
  sc.burst_levels = detail::field<std::vector<double>>(resolved, "scenario", "burst_levels");
  sc.burst_fraction = detail::field<double>(resolved, "scenario", "burst_fraction");
  sc.burst_start_fraction = detail::field<double>(resolved, "scenario", "burst_start_fraction");
  try {
    c.threshold.kind = BaselineKind::Threshold;
    c.threshold.lower = resolved.at("scenario").at("threshold").at("lower").get<double>();
    c.threshold.upper = resolved.at("scenario").at("threshold").at("upper").get<double>();
  } catch (const json::exception&) {
    throw ConfigError("scenario.threshold needs numeric lower and upper");
  }
  c.threshold.validate();
  return c;
}

// Loads a config file, merges it over the defaults, then applies overrides.
inline ExperimentConfig load_experiment(const std::filesystem::path& path,
                                        const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  json doc = default_config_json();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json user;
    try {
      user = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}: invalid JSON ({})", path.string(), e.what()));
    }
    if (!user.is_object()) throw ConfigError(path.string() + ": top level must be an object");
    detail::check_known(user, doc, "");
    doc.merge_patch(user);
    // merge_patch drops keys set to null; restore nullable fields.
    if (!doc["workload"].contains("trace")) doc["workload"]["trace"] = nullptr;
    if (!doc["workload"].contains("burst")) doc["workload"]["burst"] = nullptr;
  }
  for (const auto& [k, v] : overrides) apply_override(doc, k, v);
  return parse_experiment(doc, path.empty() ? std::filesystem::path{} : path.parent_path());
}

// Workload for one episode or evaluation seed; synthetic specs are reseeded.
inline ArrivalSchedule schedule_for(const ExperimentConfig& cfg, std::uint64_t workload_seed) {
  if (const auto* s = std::get_if<SyntheticSpec>(&cfg.workload)) {
    SyntheticSpec w = *s;
    w.seed = workload_seed;
    w.horizon = cfg.env.episode_length;
    return to_schedule(generate(w), cfg.env.episode_length);
  }
  return to_schedule(std::get<std::vector<TraceRecord>>(cfg.workload), cfg.env.episode_length);
}

inline std::uint64_t training_workload_seed(const ExperimentConfig& cfg, std::int64_t episode) {
  return derive_seed(cfg.seed, {10, static_cast<std::uint64_t>(episode)});
}

// Fits the state predictor on trajectories from threshold-policy warm-up episodes.
inline std::optional<PredictorModel> fit_predictor(const ExperimentConfig& cfg) {
  const auto& pc = cfg.env.predictor;
  if (!pc.enabled || pc.warmup_episodes == 0) return std::nullopt;
  const PolicyHandle threshold = baseline_handle("threshold", cfg.threshold);
  std::vector<PredictorSample> samples;
  for (int w = 0; w < pc.warmup_episodes; ++w) {
    const ArrivalSchedule sched = schedule_for(cfg, derive_seed(cfg.seed, {11, static_cast<std::uint64_t>(w)}));
    const RunTrace trace = run_episode(cfg.env, std::nullopt, sched, threshold);
    for (std::size_t i = 0; i < trace.observed.size(); ++i) {
      auto s = make_predictor_samples(trace.observed[i], trace.exogenous[i], pc.k);
      samples.insert(samples.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
  }
  return fit(samples, pc.k, pc.lambda);
}

inline EpisodeFactory episode_factory(const ExperimentConfig& cfg, std::optional<PredictorModel> predictor) {
  return [&cfg, predictor = std::move(predictor)](std::int64_t e) {
    return Episode{Environment(cfg.env, predictor), schedule_for(cfg, training_workload_seed(cfg, e))};
  };
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline void write_manifest(const std::filesystem::path& run_dir, json body) {
  body["timestamp_utc"] = utc_timestamp();  // the only wall-clock value in any output
  write_text(run_dir / "manifest.json", body.dump(2) + "\n");
}

inline double tail_mean(std::span<const CurveRow> curve, std::size_t n) {
  if (curve.empty()) return 0.0;
  n = std::min(n, curve.size());
  double s = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) s += curve[i].mean_return;
  return s / static_cast<double>(n);
}

struct TrainOutcome {
  int exit_code = kExitOk;
  std::filesystem::path run_dir;
  TrainResult result;
  std::optional<PredictorModel> predictor;
};

inline TrainOutcome run_train(const ExperimentConfig& cfg, std::ostream& log = std::cout, bool verbose = false) {
  TrainOutcome out;
  out.run_dir = cfg.output_dir / cfg.run_id;
  out.predictor = fit_predictor(cfg);
  const EpisodeFactory factory = episode_factory(cfg, out.predictor);
  ProgressFn progress;
  if (verbose)
    progress = [&log](const CurveRow& r) {
      log << fmt::format("episode {:4d}  return {:9.3f}  critic_loss {:9.5f}  epsilon {:.3f}\n", r.episode, r.mean_return,
                         r.critic_loss, r.epsilon);
    };
  out.result = train(factory, cfg.train, progress);

  std::filesystem::create_directories(out.run_dir);
  const auto ckpt = out.run_dir / "checkpoint";
  save_models(ckpt, out.result.models);
  if (out.predictor) write_text(ckpt / "predictor.json", to_json(*out.predictor).dump(1) + "\n");
  std::ostringstream curve;
  write_curve_csv(curve, out.result.curve);
  write_text(out.run_dir / "curve.csv", curve.str());

  json manifest;
  manifest["command"] = "train";
  manifest["config"] = cfg.raw;
  manifest["seed"] = cfg.seed;
  manifest["status"] = out.result.diverged ? "diverged" : "ok";
  if (out.result.diverged) manifest["diagnostic"] = out.result.diagnostic;
  write_manifest(out.run_dir, manifest);

  if (out.result.diverged) {
    log << "training diverged: " << out.result.diagnostic << "\npartial checkpoint: " << ckpt.string() << "\n";
    out.exit_code = kExitDivergence;
    return out;
  }
  log << fmt::format("final 10-episode mean return: {:.6f}\n", tail_mean(out.result.curve, 10));
  log << "checkpoint: " << ckpt.string() << "\n";
  return out;
}

inline const std::vector<std::string>& baseline_names() {
  static const std::vector<std::string> names{"static", "static-peak", "threshold"};
  return names;
}

struct ResolvedPolicy {
  PolicyHandle handle;
  std::optional<PredictorModel> predictor;
};

// Baseline name or checkpoint path (a checkpoint directory or a train run directory).
inline ResolvedPolicy resolve_policy(const ExperimentConfig& cfg, const std::string& name) {
  ResolvedPolicy r;
  if (name == "static") {
    r.handle = baseline_handle("static", BaselinePolicy{BaselineKind::Static, 0.0, 1.0});
  } else if (name == "static-peak") {
    r.handle = baseline_handle("static-peak", BaselinePolicy{BaselineKind::Static, 0.0, 1.0});
    r.handle.initial_cpu = cfg.env.bounds.cpu_max;
    r.handle.initial_mem = cfg.env.bounds.mem_max;
  } else if (name == "threshold") {
    r.handle = baseline_handle("threshold", cfg.threshold);
  } else {
    std::filesystem::path dir = name;
    if (std::filesystem::exists(dir / "checkpoint" / "models.json")) dir /= "checkpoint";
    if (!std::filesystem::exists(dir / "models.json"))
      throw ConfigError(fmt::format("unknown policy '{}' (valid: static, static-peak, threshold, or a checkpoint path)",
                                    name));
    MarlModels m = load_models(dir);
    if (static_cast<int>(m.policies.size()) != cfg.env.n_agents)
      throw ConfigError(fmt::format("checkpoint has {} agents but env.n_agents is {}", m.policies.size(),
                                    cfg.env.n_agents));
    r.handle = trained_handle("marl", std::move(m.policies));
    if (std::filesystem::exists(dir / "predictor.json")) {
      r.predictor = predictor_from_json(read_json_file(dir / "predictor.json"));
      if (r.predictor->k < 1) throw ConfigError("checkpoint predictor has invalid k");
    }
  }
  return r;
}

struct EvaluateOutcome {
  int exit_code = kExitOk;
  std::filesystem::path run_dir;
  std::vector<MetricsReport> reports;
  json aggregate;
};

inline EvaluateOutcome run_evaluate(const ExperimentConfig& cfg, const std::string& policy_name,
                                    std::optional<std::string> run_id = std::nullopt, std::ostream& log = std::cout) {
  EvaluateOutcome out;
  const ResolvedPolicy policy = resolve_policy(cfg, policy_name);
  const std::string scenario = std::string(scenario_kind_name(cfg.scenario.kind));
  out.run_dir = cfg.output_dir / run_id.value_or(fmt::format("{}-{}-{}", cfg.run_id, scenario, policy.handle.id));

  for (std::uint64_t seed : cfg.scenario.seeds) {
    ScenarioRun run = run_scenario(cfg.scenario, policy.handle, seed, policy.predictor);
    for (const auto& named : run.logs) {
      std::ostringstream csv;
      write_step_log(csv, named.log);
      write_text(out.run_dir / "steps" / fmt::format("seed{}_{}.csv", seed, named.name), csv.str());
    }
    write_text(out.run_dir / "reports" / fmt::format("seed{}.json", seed), to_json(run.report).dump(2) + "\n");
    out.reports.push_back(std::move(run.report));
  }
  out.aggregate = aggregate_reports(out.reports);
  write_text(out.run_dir / "report.json", out.aggregate.dump(2) + "\n");

  json manifest;
  manifest["command"] = "evaluate";
  manifest["config"] = cfg.raw;
  manifest["policy"] = policy_name;
  manifest["scenario"] = scenario;
  manifest["run_id"] = out.run_dir.filename().string();
  write_manifest(out.run_dir, manifest);

  const auto& m = out.aggregate["metrics"];
  log << fmt::format("{} on {} ({} seeds): util {:.4f}  sla {:.4f}  over {:.4f}", policy.handle.id, scenario,
                     cfg.scenario.seeds.size(), m["avg_cpu_utilization"]["mean"].get<double>(),
                     m["sla_violation_rate"]["mean"].get<double>(), m["over_provisioning"]["mean"].get<double>());
  if (m.contains("robustness_score")) log << fmt::format("  robustness {:.4f}", m["robustness_score"]["mean"].get<double>());
  log << "\nreport: " << (out.run_dir / "report.json").string() << "\n";
  return out;
}

// Re-runs the command recorded in a manifest into the same run directory.
inline int run_replay(const std::filesystem::path& manifest_path, std::ostream& log = std::cout) {
  const json manifest = read_json_file(manifest_path);
  const std::string command = manifest.value("command", "");
  ExperimentConfig cfg = parse_experiment(manifest.at("config"));
  if (command == "train") {
    cfg.output_dir = manifest_path.parent_path().parent_path();
    cfg.run_id = manifest_path.parent_path().filename().string();
    return run_train(cfg, log).exit_code;
  }
  if (command == "evaluate") {
    cfg.output_dir = manifest_path.parent_path().parent_path();
    return run_evaluate(cfg, manifest.at("policy").get<std::string>(), manifest_path.parent_path().filename().string(),
                        log)
        .exit_code;
  }
  throw ConfigError(fmt::format("{}: unknown command '{}' in manifest", manifest_path.string(), command));
}

struct ReportRow {
  std::string label;
  std::string scenario;
  double util = 0.0;
  double sla = 0.0;
  double over = 0.0;
  std::optional<double> isolation_min;
  std::optional<double> latency_var_max;
  std::optional<double> robustness;
};

inline ReportRow report_row(const json& aggregate) {
  ReportRow r;
  r.label = aggregate.value("policy", "?");
  r.scenario = aggregate.value("scenario", "?");
  const json& m = aggregate.at("metrics");
  r.util = m.at("avg_cpu_utilization").at("mean").get<double>();
  r.sla = m.at("sla_violation_rate").at("mean").get<double>();
  r.over = m.at("over_provisioning").at("mean").get<double>();
  for (auto it = m.begin(); it != m.end(); ++it) {
    const double v = it.value().at("mean").get<double>();
    if (it.key().rfind("isolation_index.", 0) == 0) r.isolation_min = std::min(r.isolation_min.value_or(1.0), v);
    if (it.key().rfind("latency_variance.", 0) == 0) r.latency_var_max = std::max(r.latency_var_max.value_or(0.0), v);
  }
  if (m.contains("robustness_score")) r.robustness = m["robustness_score"]["mean"].get<double>();
  return r;
}

inline constexpr std::string_view kReferenceLabel = "paper-reported reference, not a target";

// Policies x metrics table with the published reference row appended.
inline json build_report(const std::vector<std::filesystem::path>& run_dirs, std::ostream& text) {
  if (run_dirs.empty()) throw ConfigError("report needs at least one run directory");
  std::vector<ReportRow> rows;
  for (const auto& d : run_dirs) {
    const auto p = d / "report.json";
    if (!std::filesystem::exists(p)) throw ConfigError(fmt::format("{} has no report.json", d.string()));
    try {
      rows.push_back(report_row(read_json_file(p)));
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}: malformed report ({})", p.string(), e.what()));
    }
  }
  auto opt = [](const std::optional<double>& v, const char* f) { return v ? fmt::format(fmt::runtime(f), *v) : std::string("-"); };

  text << fmt::format("{:<40} {:<28} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}\n", "policy", "scenario", "util(%)",
                      "sla(%)", "over(%)", "iso_min", "latvar", "robust");
  json out;
  out["rows"] = json::array();
  for (const auto& r : rows) {
    text << fmt::format("{:<40} {:<28} {:>10.2f} {:>10.3f} {:>10.2f} {:>10} {:>10} {:>10}\n", r.label, r.scenario,
                        100.0 * r.util, 100.0 * r.sla, 100.0 * r.over, opt(r.isolation_min, "{:.3f}"),
                        opt(r.latency_var_max, "{:.3f}"), opt(r.robustness, "{:.3f}"));
    json jr{{"policy", r.label},
            {"scenario", r.scenario},
            {"avg_cpu_utilization_pct", 100.0 * r.util},
            {"sla_violation_rate_pct", 100.0 * r.sla},
            {"over_provisioning_pct", 100.0 * r.over}};
    jr["isolation_index_min"] = r.isolation_min ? json(*r.isolation_min) : json(nullptr);
    jr["latency_variance_max"] = r.latency_var_max ? json(*r.latency_var_max) : json(nullptr);
    jr["robustness_score"] = r.robustness ? json(*r.robustness) : json(nullptr);
    out["rows"].push_back(jr);
  }
  text << fmt::format("{:<40} {:<28} {:>10.2f} {:>10.3f} {:>10.2f} {:>10} {:>10} {:>10}\n", kReferenceLabel, "Table 1 (Ours)",
                      78.6, 0.92, 6.3, ">0.88", "<1.2", "0.78-0.93");
  text << "reference notes: isolation index above 0.88 (memory up to 0.95); latency variance under 1.2;\n"
          "burst robustness 0.93 / 0.89 / 0.78 at low / moderate / extreme. Metric definitions differ; not comparable\n"
          "like-for-like.\n";
  out["reference"] = {{"label", kReferenceLabel},
                      {"avg_cpu_utilization_pct", 78.6},
                      {"sla_violation_rate_pct", 0.92},
                      {"over_provisioning_pct", 6.3},
                      {"isolation_index_min", 0.88},
                      {"isolation_index_max", 0.95},
                      {"latency_variance_bound", 1.2},
                      {"robustness_low", 0.93},
                      {"robustness_moderate", 0.89},
                      {"robustness_extreme", 0.78}};
  return out;
}

}  // namespace elastic
