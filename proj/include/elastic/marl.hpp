#pragma once

// Centralized training, decentralized execution.
//
// Each agent owns a policy over its local 6-feature observation and a critic
// Q_i(s, a_1..a_n) over the global observed state and the one-hot joint action.
// Critics regress on y_i = r_i + gamma * max_a' Q_i^target(s', a'); policies
// ascend E[log pi_i(a_i | o_i) * A_i] with the counterfactual advantage
// A_i = Q_i(s, a) - mean_{a_i'} Q_i(s, (a_i', a_-i)).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "elastic/action.hpp"
#include "elastic/env.hpp"
#include "elastic/errors.hpp"
#include "elastic/nn.hpp"
#include "elastic/rng.hpp"
#include "elastic/workload.hpp"
#include "json.hpp"

namespace elastic {

enum class JointMaxMode { Enumerate, PerAgentGreedy };
enum class CriticScope { Central, Local };

inline constexpr std::int64_t kEnumerateCap = 20000;

inline std::string_view joint_max_name(JointMaxMode m) {
  return m == JointMaxMode::Enumerate ? "enumerate" : "per_agent_greedy";
}
inline JointMaxMode parse_joint_max(std::string_view s) {
  if (s == "enumerate") return JointMaxMode::Enumerate;
  if (s == "per_agent_greedy") return JointMaxMode::PerAgentGreedy;
  throw ConfigError(fmt::format("unknown joint-max mode '{}' (valid: enumerate, per_agent_greedy)", s));
}
inline std::string_view critic_scope_name(CriticScope s) { return s == CriticScope::Central ? "central" : "local"; }
inline CriticScope parse_critic_scope(std::string_view s) {
  if (s == "central") return CriticScope::Central;
  if (s == "local") return CriticScope::Local;
  throw ConfigError(fmt::format("unknown critic scope '{}' (valid: central, local)", s));
}

inline std::int64_t joint_action_count(int n_agents) {
  std::int64_t c = 1;
  for (int i = 0; i < n_agents; ++i) {
    c *= 3;
    if (c > kEnumerateCap) return c;
  }
  return c;
}

struct TrainConfig {
  std::int64_t episodes = 300;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_decay_episodes = -1;  // negative: 60% of episodes
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 50000;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  std::int64_t target_sync = 200;
  JointMaxMode joint_max = JointMaxMode::Enumerate;
  // Local critics see only their own agent: the independent-learner baseline.
  CriticScope critic_scope = CriticScope::Central;
  std::vector<std::size_t> hidden{32, 32};
  std::uint64_t seed = 0;
  std::size_t warmup_transitions = 0;  // 0: batch_size

  std::int64_t decay_episodes() const noexcept {
    return epsilon_decay_episodes >= 0 ? epsilon_decay_episodes
                                       : static_cast<std::int64_t>(std::llround(0.6 * static_cast<double>(episodes)));
  }
  std::size_t warmup() const noexcept { return warmup_transitions > 0 ? warmup_transitions : batch_size; }

  void validate(int n_agents) const {
    if (episodes < 0) throw ConfigError("train.episodes must be >= 0");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) || !(epsilon_end >= 0.0 && epsilon_end <= 1.0))
      throw ConfigError("train epsilon values must lie in [0, 1]");
    if (epsilon_end > epsilon_start) throw ConfigError("train.epsilon_end must not exceed train.epsilon_start");
    if (batch_size == 0) throw ConfigError("train.batch_size must be > 0");
    if (buffer_capacity < batch_size) throw ConfigError("train.buffer_capacity must be >= train.batch_size");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("train learning rates must be > 0");
    if (target_sync < 1) throw ConfigError("train.target_sync must be >= 1");
    for (auto h : hidden)
      if (h == 0) throw ConfigError("train.hidden sizes must be > 0");
    if (joint_max == JointMaxMode::Enumerate && critic_scope == CriticScope::Central &&
        joint_action_count(n_agents) > kEnumerateCap)
      throw ConfigError(fmt::format("enumerate mode needs 3^n <= {} (n = {}); set train.joint_max to per_agent_greedy",
                                    kEnumerateCap, n_agents));
  }
};

// Linear decay from start to end over the decay episodes, then flat.
inline double epsilon_at(const TrainConfig& cfg, std::int64_t episode) {
  const std::int64_t decay = cfg.decay_episodes();
  if (decay <= 0 || episode >= decay) return cfg.epsilon_end;
  const double frac = std::clamp(static_cast<double>(episode) / static_cast<double>(decay), 0.0, 1.0);
  const double eps = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
  return std::clamp(eps, cfg.epsilon_end, cfg.epsilon_start);
}

struct AgentPolicy {
  DenseNet net;

  std::vector<double> logits(const StateVec& obs) const {
    const auto f = obs.features();
    return forward(net, f);
  }
};

inline std::array<double, 3> softmax3(std::span<const double> logits) {
  const double m = std::max({logits[0], logits[1], logits[2]});
  std::array<double, 3> p{std::exp(logits[0] - m), std::exp(logits[1] - m), std::exp(logits[2] - m)};
  const double z = p[0] + p[1] + p[2];
  for (double& v : p) v /= z;
  return p;
}

// Lowest index wins ties.
inline int argmax3(std::span<const double> v) {
  int best = 0;
  for (int a = 1; a < 3; ++a)
    if (v[static_cast<std::size_t>(a)] > v[static_cast<std::size_t>(best)]) best = a;
  return best;
}

inline ActionChoice greedy_action(const AgentPolicy& policy, const StateVec& obs) {
  return action_from_index(argmax3(policy.logits(obs)));
}

// Agent i's choice reads only observations[i].
inline std::vector<ActionChoice> select_actions(std::span<const AgentPolicy> policies,
                                                std::span<const StateVec> observations, double epsilon, Rng& rng) {
  if (policies.size() != observations.size()) throw InputError("select_actions: one observation per policy");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("select_actions: epsilon must lie in [0, 1]");
  std::vector<ActionChoice> out;
  out.reserve(policies.size());
  for (std::size_t i = 0; i < policies.size(); ++i) {
    if (epsilon > 0.0 && rng.uniform() < epsilon)
      out.push_back(action_from_index(static_cast<int>(rng.uniform_index(3))));
    else
      out.push_back(greedy_action(policies[i], observations[i]));
  }
  return out;
}

struct CentralCritic {
  int agent = 0;
  int n_agents = 1;
  CriticScope scope = CriticScope::Central;
  DenseNet net;
  DenseNet target;
  std::int64_t updates = 0;

  int scope_size() const noexcept { return scope == CriticScope::Central ? n_agents : 1; }
  std::size_t input_size() const noexcept { return 6 * static_cast<std::size_t>(scope_size()); }
  // Agent whose action occupies one-hot block b.
  int block_agent(int b) const noexcept { return scope == CriticScope::Central ? b : agent; }
};

// Assembles critic inputs: [observed states of in-scope agents | one-hot actions].
class CriticInput {
 public:
  explicit CriticInput(const CentralCritic& c) : critic_(c), buf_(c.input_size(), 0.0) {}

  void set_state(std::span<const StateVec> states) {
    for (int b = 0; b < critic_.scope_size(); ++b) {
      const auto& s = states[static_cast<std::size_t>(critic_.block_agent(b))];
      buf_[3 * b] = s.cpu_utilization;
      buf_[3 * b + 1] = s.mem_occupancy;
      buf_[3 * b + 2] = s.queue_length_norm;
    }
  }
  // Action index (0..2) for one-hot block b.
  void set_block(int b, int action_idx) {
    const std::size_t base = 3 * static_cast<std::size_t>(critic_.scope_size()) + 3 * static_cast<std::size_t>(b);
    buf_[base] = buf_[base + 1] = buf_[base + 2] = 0.0;
    buf_[base + static_cast<std::size_t>(action_idx)] = 1.0;
  }
  void set_joint(std::span<const ActionChoice> joint) {
    for (int b = 0; b < critic_.scope_size(); ++b)
      set_block(b, action_index(joint[static_cast<std::size_t>(critic_.block_agent(b))]));
  }
  std::span<const double> values() const noexcept { return buf_; }

 private:
  const CentralCritic& critic_;
  std::vector<double> buf_;
};

inline double critic_value(const DenseNet& net, const CriticInput& in, Workspace& ws) {
  return forward(net, in.values(), ws)[0];
}

namespace detail {

inline double max_enumerate(const CentralCritic& c, const DenseNet& net, CriticInput& in, Workspace& ws) {
  const int blocks = c.scope_size();
  std::int64_t total = 1;
  for (int b = 0; b < blocks; ++b) total *= 3;
  double best = -std::numeric_limits<double>::infinity();
  for (std::int64_t j = 0; j < total; ++j) {
    std::int64_t code = j;
    for (int b = 0; b < blocks; ++b) {
      in.set_block(b, static_cast<int>(code % 3));
      code /= 3;
    }
    best = std::max(best, critic_value(net, in, ws));
  }
  return best;
}

// Coordinate ascent from the policies' greedy joint action; at most 3 sweeps.
inline double max_coordinate_ascent(const CentralCritic& c, const DenseNet& net, CriticInput& in, Workspace& ws,
                                    std::span<const int> start) {
  const int blocks = c.scope_size();
  std::vector<int> joint(start.begin(), start.end());
  for (int b = 0; b < blocks; ++b) in.set_block(b, joint[static_cast<std::size_t>(b)]);
  double current = critic_value(net, in, ws);
  for (int sweep = 0; sweep < 3; ++sweep) {
    bool changed = false;
    for (int b = 0; b < blocks; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      int best_a = joint[ub];
      double best_v = current;
      for (int a = 0; a < 3; ++a) {
        if (a == joint[ub]) continue;
        in.set_block(b, a);
        const double v = critic_value(net, in, ws);
        if (v > best_v) {
          best_v = v;
          best_a = a;
        }
      }
      in.set_block(b, best_a);
      if (best_a != joint[ub]) {
        joint[ub] = best_a;
        current = best_v;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return current;
}

}  // namespace detail

// max over next joint actions of the target critic at the transition's next state.
inline double joint_max(const CentralCritic& critic, const Transition& tr, JointMaxMode mode,
                        std::span<const AgentPolicy> policies, Workspace& ws) {
  CriticInput in(critic);
  in.set_state(tr.next_state);
  if (critic.scope == CriticScope::Local || mode == JointMaxMode::Enumerate) {
    if (critic.scope == CriticScope::Central && joint_action_count(critic.n_agents) > kEnumerateCap)
      throw ConfigError(fmt::format("enumerate mode needs 3^n <= {}; switch to per_agent_greedy", kEnumerateCap));
    return detail::max_enumerate(critic, critic.target, in, ws);
  }
  if (policies.size() != static_cast<std::size_t>(critic.n_agents))
    throw InputError("per_agent_greedy mode needs every agent's policy");
  std::vector<int> start;
  for (int b = 0; b < critic.scope_size(); ++b) {
    const auto a = static_cast<std::size_t>(critic.block_agent(b));
    start.push_back(action_index(greedy_action(policies[a], tr.next_state[a])));
  }
  return detail::max_coordinate_ascent(critic, critic.target, in, ws, start);
}

inline double td_target(const CentralCritic& critic, const Transition& tr, double gamma, JointMaxMode mode,
                        std::span<const AgentPolicy> policies = {}) {
  const double r = tr.rewards.at(static_cast<std::size_t>(critic.agent));
  if (tr.terminal) return r;
  Workspace ws;
  return r + gamma * joint_max(critic, tr, mode, policies, ws);
}

using Batch = std::vector<const Transition*>;

inline Batch make_batch(std::span<const Transition> transitions) {
  Batch b;
  for (const auto& t : transitions) b.push_back(&t);
  return b;
}

struct LossAndGradient {
  double value = 0.0;
  std::vector<double> grad;
};

// Mean squared error of the online critic against fixed targets, and its gradient.
inline LossAndGradient critic_loss_gradient(const CentralCritic& critic, const Batch& batch,
                                            std::span<const double> targets) {
  LossAndGradient out{0.0, std::vector<double>(critic.net.parameter_count(), 0.0)};
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  CriticInput in(critic);
  Workspace ws;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    in.set_state(batch[k]->state);
    in.set_joint(batch[k]->joint_action);
    const double q = critic_value(critic.net, in, ws);
    const double resid = q - targets[k];
    out.value += resid * resid * inv_n;
    const double g = 2.0 * resid * inv_n;
    backward_from_workspace(critic.net, std::span<const double>(&g, 1), out.grad, ws);
  }
  return out;
}

// One descent step on the TD loss. Returns the loss before the step.
inline double critic_update(CentralCritic& critic, const Batch& batch, double gamma, JointMaxMode mode,
                            OptimizerState& opt, std::int64_t target_sync, std::span<const AgentPolicy> policies = {}) {
  if (batch.empty()) throw InputError("critic_update: empty batch");
  std::vector<double> targets;
  targets.reserve(batch.size());
  Workspace ws;
  for (const Transition* tr : batch) {
    const double r = tr->rewards.at(static_cast<std::size_t>(critic.agent));
    targets.push_back(tr->terminal ? r : r + gamma * joint_max(critic, *tr, mode, policies, ws));
  }
  const LossAndGradient lg = critic_loss_gradient(critic, batch, targets);
  if (!std::isfinite(lg.value))
    throw DivergenceError(fmt::format("critic {}: non-finite TD loss; update rejected", critic.agent));
  apply_gradients(critic.net, lg.grad, opt, Direction::Descend);
  ++critic.updates;
  if (critic.updates % target_sync == 0) critic.target = critic.net;
  return lg.value;
}

// Counterfactual advantages of agent i's three actions at one transition,
// other agents' recorded actions fixed. Returns Q for each of agent i's actions.
inline std::array<double, 3> counterfactual_values(const CentralCritic& critic, const Transition& tr, Workspace& ws) {
  CriticInput in(critic);
  in.set_state(tr.state);
  in.set_joint(tr.joint_action);
  const int own_block = critic.scope == CriticScope::Central ? critic.agent : 0;
  std::array<double, 3> q{};
  for (int a = 0; a < 3; ++a) {
    in.set_block(own_block, a);
    q[static_cast<std::size_t>(a)] = critic_value(critic.net, in, ws);
  }
  return q;
}

inline std::array<double, 3> counterfactual_advantages(const CentralCritic& critic, const Transition& tr) {
  Workspace ws;
  const auto q = counterfactual_values(critic, tr, ws);
  const double baseline = (q[0] + q[1] + q[2]) / 3.0;
  return {q[0] - baseline, q[1] - baseline, q[2] - baseline};
}

// Surrogate objective mean_k log pi(a_i | o_i) * A_i and its gradient in the policy parameters.
inline LossAndGradient actor_objective_gradient(const AgentPolicy& policy, const CentralCritic& critic,
                                                const Batch& batch) {
  LossAndGradient out{0.0, std::vector<double>(policy.net.parameter_count(), 0.0)};
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const auto agent = static_cast<std::size_t>(critic.agent);
  Workspace critic_ws;
  Workspace policy_ws;
  for (const Transition* tr : batch) {
    const auto q = counterfactual_values(critic, *tr, critic_ws);
    const int taken = action_index(tr->joint_action[agent]);
    const double advantage = q[static_cast<std::size_t>(taken)] - (q[0] + q[1] + q[2]) / 3.0;

    const auto features = tr->state[agent].features();
    const auto logits = forward(policy.net, features, policy_ws);
    const double m = std::max({logits[0], logits[1], logits[2]});
    const double log_z =
        m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m) + std::exp(logits[2] - m));
    const double logp = logits[static_cast<std::size_t>(taken)] - log_z;
    out.value += logp * advantage * inv_n;

    std::array<double, 3> g{};
    for (int a = 0; a < 3; ++a) {
      const double p = std::exp(logits[static_cast<std::size_t>(a)] - log_z);
      g[static_cast<std::size_t>(a)] = advantage * ((a == taken ? 1.0 : 0.0) - p) * inv_n;
    }
    if (g[0] != 0.0 || g[1] != 0.0 || g[2] != 0.0) backward_from_workspace(policy.net, g, out.grad, policy_ws);
  }
  return out;
}

// One ascent step on the surrogate. The critic is read, never written.
// Returns the objective before the step.
inline double actor_update(AgentPolicy& policy, const CentralCritic& critic, const Batch& batch, OptimizerState& opt) {
  if (batch.empty()) throw InputError("actor_update: empty batch");
  const LossAndGradient lg = actor_objective_gradient(policy, critic, batch);
  if (!std::isfinite(lg.value))
    throw DivergenceError(fmt::format("actor {}: non-finite objective; update rejected", critic.agent));
  apply_gradients(policy.net, lg.grad, opt, Direction::Ascend);
  return lg.value;
}

// Bounded FIFO of transitions with a seeded sampler.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be > 0");
    items_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  // Distinct transitions, at most min(n, size()).
  Batch sample(std::size_t n, Rng& rng) const {
    const std::size_t size = items_.size();
    n = std::min(n, size);
    std::vector<std::size_t> picked;
    picked.reserve(n);
    if (2 * n >= size) {
      std::vector<std::size_t> idx(size);
      for (std::size_t i = 0; i < size; ++i) idx[i] = i;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(size - i));
        std::swap(idx[i], idx[j]);
        picked.push_back(idx[i]);
      }
    } else {
      while (picked.size() < n) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(size));
        if (std::find(picked.begin(), picked.end(), j) == picked.end()) picked.push_back(j);
      }
    }
    Batch b;
    b.reserve(n);
    for (std::size_t j : picked) b.push_back(&items_[j]);
    return b;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;
};

struct MarlModels {
  std::vector<AgentPolicy> policies;
  std::vector<CentralCritic> critics;
};

inline MarlModels init_models(int n_agents, const TrainConfig& cfg) {
  MarlModels m;
  for (int i = 0; i < n_agents; ++i) {
    const auto ui = static_cast<std::uint64_t>(i);
    std::vector<std::size_t> psizes{kPolicyInputDim};
    psizes.insert(psizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    psizes.push_back(3);
    Rng prng(derive_seed(cfg.seed, {1, ui}));
    m.policies.push_back({DenseNet::initialized(psizes, prng)});

    CentralCritic c;
    c.agent = i;
    c.n_agents = n_agents;
    c.scope = cfg.critic_scope;
    std::vector<std::size_t> csizes{c.input_size()};
    csizes.insert(csizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    csizes.push_back(1);
    Rng crng(derive_seed(cfg.seed, {2, ui}));
    c.net = DenseNet::initialized(csizes, crng);
    c.target = c.net;
    m.critics.push_back(std::move(c));
  }
  return m;
}

struct Episode {
  Environment env;
  ArrivalSchedule arrivals;
};

using EpisodeFactory = std::function<Episode(std::int64_t episode)>;

struct CurveRow {
  std::int64_t episode = 0;
  double mean_return = 0.0;
  double critic_loss = 0.0;
  double epsilon = 0.0;

  bool operator==(const CurveRow&) const = default;
};

struct TrainResult {
  MarlModels models;
  std::vector<CurveRow> curve;
  bool diverged = false;
  std::string diagnostic;
};

inline const std::vector<Task>& arrivals_at(const ArrivalSchedule& s, std::int64_t t) {
  static const std::vector<Task> kNone;
  return t < static_cast<std::int64_t>(s.size()) ? s[static_cast<std::size_t>(t)] : kNone;
}

using ProgressFn = std::function<void(const CurveRow&)>;

// Episode loop. After the buffer holds warmup() transitions, every environment
// step performs one critic and one actor update per agent. A divergence stops
// training and returns the last good models with diverged = true.
inline TrainResult train(const EpisodeFactory& make_episode, const TrainConfig& cfg, const ProgressFn& progress = {}) {
  TrainResult result;
  Episode first = make_episode(0);
  const EnvConfig env_cfg = first.env.config();
  const int n = env_cfg.n_agents;
  cfg.validate(n);
  result.models = init_models(n, cfg);
  if (cfg.episodes == 0) return result;

  auto& policies = result.models.policies;
  auto& critics = result.models.critics;
  std::vector<OptimizerState> actor_opt;
  std::vector<OptimizerState> critic_opt;
  for (int i = 0; i < n; ++i) {
    actor_opt.emplace_back(policies[static_cast<std::size_t>(i)].net.parameter_count(), cfg.actor_lr);
    critic_opt.emplace_back(critics[static_cast<std::size_t>(i)].net.parameter_count(), cfg.critic_lr);
  }
  ReplayBuffer buffer(cfg.buffer_capacity);
  Rng explore(derive_seed(cfg.seed, {3}));
  Rng sampler(derive_seed(cfg.seed, {4}));

  for (std::int64_t e = 0; e < cfg.episodes; ++e) {
    Episode ep = e == 0 ? std::move(first) : make_episode(e);
    const double gamma = ep.env.config().gamma;
    const double eps = epsilon_at(cfg, e);
    std::vector<double> returns(static_cast<std::size_t>(n), 0.0);
    double loss_sum = 0.0;
    std::int64_t loss_count = 0;
    try {
      while (!ep.env.done()) {
        const auto actions = select_actions(policies, ep.env.observations(), eps, explore);
        StepResult sr = ep.env.step(actions, arrivals_at(ep.arrivals, ep.env.steps_taken()));
        for (int i = 0; i < n; ++i) returns[static_cast<std::size_t>(i)] += sr.transition.rewards[static_cast<std::size_t>(i)];
        buffer.push(std::move(sr.transition));
        if (buffer.size() < cfg.warmup()) continue;
        for (int i = 0; i < n; ++i) {
          const auto ui = static_cast<std::size_t>(i);
          const Batch batch = buffer.sample(cfg.batch_size, sampler);
          loss_sum += critic_update(critics[ui], batch, gamma, cfg.joint_max, critic_opt[ui], cfg.target_sync, policies);
          ++loss_count;
          actor_update(policies[ui], critics[ui], batch, actor_opt[ui]);
        }
      }
    } catch (const DivergenceError& err) {
      result.diverged = true;
      result.diagnostic = fmt::format("episode {}: {}", e, err.what());
      return result;
    }
    CurveRow row;
    row.episode = e;
    double total = 0.0;
    for (double r : returns) total += r;
    row.mean_return = total / static_cast<double>(n);
    row.critic_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    row.epsilon = eps;
    result.curve.push_back(row);
    if (progress) progress(row);
  }
  return result;
}

inline void write_curve_csv(std::ostream& out, std::span<const CurveRow> curve) {
  out << "episode,mean_return,critic_loss,epsilon\n";
  for (const auto& r : curve) out << fmt::format("{},{},{},{}\n", r.episode, r.mean_return, r.critic_loss, r.epsilon);
}

// checkpoint/: policy_<i>.json, critic_<i>.json, models.json (agent count, scope).
inline void save_models(const std::filesystem::path& dir, const MarlModels& m) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < m.policies.size(); ++i) {
    std::ofstream(dir / fmt::format("policy_{}.json", i)) << to_json(m.policies[i].net).dump(1) << '\n';
    std::ofstream(dir / fmt::format("critic_{}.json", i)) << to_json(m.critics[i].net).dump(1) << '\n';
  }
  nlohmann::json meta;
  meta["n_agents"] = m.policies.size();
  meta["critic_scope"] = m.critics.empty() ? "central" : std::string(critic_scope_name(m.critics[0].scope));
  meta["policy_input_dim"] = kPolicyInputDim;
  std::ofstream(dir / "models.json") << meta.dump(1) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

inline MarlModels load_models(const std::filesystem::path& dir) {
  const auto meta = read_json_file(dir / "models.json");
  const int n = meta.at("n_agents").get<int>();
  if (meta.value("policy_input_dim", kPolicyInputDim) != kPolicyInputDim)
    throw ConfigError("checkpoint policy input dimension does not match this build");
  const CriticScope scope = parse_critic_scope(meta.value("critic_scope", std::string("central")));
  MarlModels m;
  for (int i = 0; i < n; ++i) {
    AgentPolicy p{dense_net_from_json(read_json_file(dir / fmt::format("policy_{}.json", i)))};
    if (p.net.input_size() != kPolicyInputDim || p.net.output_size() != 3)
      throw ConfigError(fmt::format("checkpoint policy_{} has the wrong shape", i));
    m.policies.push_back(std::move(p));
    CentralCritic c;
    c.agent = i;
    c.n_agents = n;
    c.scope = scope;
    c.net = dense_net_from_json(read_json_file(dir / fmt::format("critic_{}.json", i)));
    if (c.net.input_size() != c.input_size() || c.net.output_size() != 1)
      throw ConfigError(fmt::format("checkpoint critic_{} has the wrong shape", i));
    c.target = c.net;
    m.critics.push_back(std::move(c));
  }
  return m;
}

}  // namespace elastic
