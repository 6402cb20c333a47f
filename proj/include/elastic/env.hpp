#pragma once

// MDP wrapper around the simulator: local observations, ternary scaling
// actions, per-agent local rewards, and transitions for replay.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elastic/action.hpp"
#include "elastic/errors.hpp"
#include "elastic/predict.hpp"
#include "elastic/scaling.hpp"
#include "elastic/sim_core.hpp"

namespace elastic {

inline constexpr std::size_t kObservedDim = 3;
inline constexpr std::size_t kPolicyInputDim = 6;

struct StateVec {
  double cpu_utilization = 0.0;
  double mem_occupancy = 0.0;
  double queue_length_norm = 0.0;
  std::optional<State3> predicted_next{};

  State3 observed() const noexcept { return {cpu_utilization, mem_occupancy, queue_length_norm}; }

  // Policy input: observed components followed by the prediction (the observed
  // state stands in when no prediction is attached).
  std::array<double, kPolicyInputDim> features() const noexcept {
    const State3 p = predicted_next.value_or(observed());
    return {cpu_utilization, mem_occupancy, queue_length_norm, p[0], p[1], p[2]};
  }

  bool operator==(const StateVec&) const = default;
};

struct Transition {
  std::vector<StateVec> state;
  std::vector<ActionChoice> joint_action;
  std::vector<double> rewards;
  std::vector<StateVec> next_state;
  bool terminal = false;

  std::size_t n_agents() const noexcept { return joint_action.size(); }
};

// Observed components of every agent, concatenated (length 3n).
inline std::vector<double> global_state(std::span<const StateVec> states) {
  std::vector<double> g;
  g.reserve(states.size() * kObservedDim);
  for (const auto& s : states) {
    g.push_back(s.cpu_utilization);
    g.push_back(s.mem_occupancy);
    g.push_back(s.queue_length_norm);
  }
  return g;
}

struct PredictorConfig {
  bool enabled = true;
  int k = 5;
  double lambda = 1e-3;
  // Arrivals per step that map to an exogenous factor of 1.
  double rate_cap = 10.0;
  // Threshold-policy episodes used to collect fitting data.
  int warmup_episodes = 4;
};

struct EnvConfig {
  int n_agents = 2;
  double gamma = 0.95;
  std::int64_t episode_length = 200;
  int queue_norm_cap = 50;
  double w_util = 1.0;
  double w_sla = 1.0;
  double w_over = 0.5;
  double cpu_step = 1.0;
  double mem_step = 1.0;
  CapacityBounds bounds{};
  double initial_cpu = 4.0;
  double initial_mem = 4.0;
  std::vector<int> agent_priority{};  // empty = all 1
  PredictorConfig predictor{};

  ScaleQuanta quanta() const noexcept { return {cpu_step, mem_step}; }

  std::vector<int> priorities() const {
    return agent_priority.empty() ? std::vector<int>(static_cast<std::size_t>(n_agents), 1) : agent_priority;
  }

  void validate() const {
    if (n_agents < 1) throw ConfigError("env.n_agents must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("env.gamma must lie in [0, 1]");
    if (episode_length <= 0) throw ConfigError("env.episode_length must be > 0");
    if (queue_norm_cap < 1) throw ConfigError("env.queue_norm_cap must be >= 1");
    if (w_util < 0.0 || w_sla < 0.0 || w_over < 0.0) throw ConfigError("env reward weights must be >= 0");
    if (!(cpu_step > 0.0) || !(mem_step > 0.0)) throw ConfigError("env.cpu_step and env.mem_step must be > 0");
    if (!(bounds.cpu_min > 0.0) || !(bounds.mem_min > 0.0) || bounds.cpu_min > bounds.cpu_max ||
        bounds.mem_min > bounds.mem_max)
      throw ConfigError("env capacity bounds must satisfy 0 < min <= max");
    if (!agent_priority.empty() && agent_priority.size() != static_cast<std::size_t>(n_agents))
      throw ConfigError("env.agent_priority length must equal env.n_agents");
    for (int p : agent_priority)
      if (p < 1) throw ConfigError("env.agent_priority entries must be >= 1");
    if (predictor.k < 1) throw ConfigError("env.predictor.k must be >= 1");
    if (!(predictor.lambda >= 0.0)) throw ConfigError("env.predictor.lambda must be >= 0");
    if (!(predictor.rate_cap > 0.0)) throw ConfigError("env.predictor.rate_cap must be > 0");
    if (predictor.warmup_episodes < 0) throw ConfigError("env.predictor.warmup_episodes must be >= 0");
  }
};

inline StateVec observe(const ClusterSnapshot& snap, int agent_id, std::optional<State3> prediction,
                        int queue_norm_cap) {
  if (agent_id < 0 || static_cast<std::size_t>(agent_id) >= snap.pools.size())
    throw InputError("observe: agent " + std::to_string(agent_id) + " out of range");
  const PoolRecord& p = snap.pools[static_cast<std::size_t>(agent_id)];
  if (!(p.cpu_capacity > 0.0) || !(p.mem_capacity > 0.0))
    throw InvariantError("observe: pool " + std::to_string(agent_id) + " has zero capacity");
  StateVec s;
  s.cpu_utilization = std::clamp(p.cpu_used / p.cpu_capacity, 0.0, 1.0);
  s.mem_occupancy = std::clamp(p.mem_used / p.mem_capacity, 0.0, 1.0);
  s.queue_length_norm =
      std::clamp(static_cast<double>(p.queue_length) / static_cast<double>(queue_norm_cap), 0.0, 1.0);
  if (prediction) {
    State3 q = *prediction;
    for (double& v : q) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    s.predicted_next = q;
  }
  return s;
}

// r_i = w_util * util_i - w_sla * violations_i - w_over * idle_i, all taken from `next`.
inline double reward(const ClusterSnapshot& prev, const ClusterSnapshot& next, int agent_id, const EnvConfig& cfg) {
  if (next.step != prev.step + 1) throw InputError("reward: snapshots are not consecutive");
  if (agent_id < 0 || static_cast<std::size_t>(agent_id) >= next.pools.size())
    throw InputError("reward: agent out of range");
  const PoolRecord& p = next.pools[static_cast<std::size_t>(agent_id)];
  const double util = std::clamp(p.cpu_used / p.cpu_capacity, 0.0, 1.0);
  const double idle = 1.0 - util;
  return cfg.w_util * util - cfg.w_sla * static_cast<double>(p.violated_this_step) - cfg.w_over * idle;
}

struct StepResult {
  Transition transition;
  ClusterSnapshot snapshot;
  double delta_R = 0.0;
};

class Environment {
 public:
  explicit Environment(EnvConfig cfg, std::optional<PredictorModel> predictor = std::nullopt)
      : cfg_(std::move(cfg)), predictor_(std::move(predictor)) {
    cfg_.validate();
    reset();
  }

  const EnvConfig& config() const noexcept { return cfg_; }
  const std::optional<PredictorModel>& predictor() const noexcept { return predictor_; }
  const std::vector<ResourcePool>& pools() const noexcept { return pools_; }
  const std::vector<StateVec>& observations() const noexcept { return obs_; }
  const ClusterSnapshot& last_snapshot() const noexcept { return snapshot_; }
  std::int64_t steps_taken() const noexcept { return t_; }
  bool done() const noexcept { return t_ >= cfg_.episode_length; }

  const std::vector<StateVec>& reset() {
    pools_.clear();
    for (int i = 0; i < cfg_.n_agents; ++i) pools_.emplace_back(i, cfg_.bounds, cfg_.initial_cpu, cfg_.initial_mem);
    t_ = 0;
    const int k = predictor_ ? predictor_->k : cfg_.predictor.k;
    history_.assign(static_cast<std::size_t>(cfg_.n_agents), HistoryWindow(k));
    snapshot_ = snapshot_of(pools_, -1);
    obs_ = build_observations(snapshot_);
    return obs_;
  }

  StepResult step(std::span<const ActionChoice> joint_action, std::span<const Task> arrivals) {
    if (done()) throw ProtocolError("env_step called after the episode ended");
    if (joint_action.size() != static_cast<std::size_t>(cfg_.n_agents))
      throw InputError("env_step: expected " + std::to_string(cfg_.n_agents) + " actions");

    const AgentWeights weights = compute_alpha(load_shares(snapshot_), cfg_.priorities());
    const ScalingOutcome scaled = apply_delta(pools_, joint_action, weights, cfg_.quanta());
    ClusterSnapshot next = sim_step(pools_, arrivals, t_);

    StepResult out;
    out.delta_R = scaled.delta_R;
    Transition& tr = out.transition;
    tr.state = obs_;
    tr.joint_action.assign(joint_action.begin(), joint_action.end());
    tr.rewards.reserve(joint_action.size());
    for (int i = 0; i < cfg_.n_agents; ++i) tr.rewards.push_back(reward(snapshot_, next, i, cfg_));
    ++t_;
    tr.terminal = done();
    obs_ = build_observations(next);
    tr.next_state = obs_;
    snapshot_ = next;
    out.snapshot = std::move(next);
    return out;
  }

 private:
  std::vector<StateVec> build_observations(const ClusterSnapshot& snap) {
    std::vector<StateVec> obs;
    obs.reserve(snap.pools.size());
    for (int i = 0; i < cfg_.n_agents; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const StateVec base = observe(snap, i, std::nullopt, cfg_.queue_norm_cap);
      history_[ui].push(base.observed());
      history_[ui].set_exogenous(static_cast<double>(snap.pools[ui].arrivals_this_step) / cfg_.predictor.rate_cap);
      State3 pred = (predictor_ && history_[ui].warmed_up()) ? predict(*predictor_, history_[ui])
                                                              : persistence_baseline(history_[ui]);
      obs.push_back(observe(snap, i, pred, cfg_.queue_norm_cap));
    }
    return obs;
  }

  EnvConfig cfg_;
  std::optional<PredictorModel> predictor_;
  std::vector<ResourcePool> pools_;
  std::vector<HistoryWindow> history_;
  std::vector<StateVec> obs_;
  ClusterSnapshot snapshot_;
  std::int64_t t_ = 0;
};

// Builds predictor samples from one agent's observed trajectory: the window
// ending at t together with exogenous[t] predicts states[t + 1].
inline std::vector<PredictorSample> make_predictor_samples(std::span<const State3> states,
                                                           std::span<const double> exogenous, int k) {
  if (states.size() != exogenous.size()) throw InputError("make_predictor_samples: length mismatch");
  std::vector<PredictorSample> out;
  const auto uk = static_cast<std::size_t>(k);
  for (std::size_t t = uk - 1; t + 1 < states.size(); ++t) {
    PredictorSample s;
    s.window.assign(states.begin() + static_cast<std::ptrdiff_t>(t + 1 - uk),
                    states.begin() + static_cast<std::ptrdiff_t>(t + 1));
    s.exogenous = exogenous[t];
    s.next = states[t + 1];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace elastic
