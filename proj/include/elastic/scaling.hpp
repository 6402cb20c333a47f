#pragma once

// Resource adjustment: agent weights from load share and priority, the
// aggregate adjustment signal, and per-pool capacity changes.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "elastic/action.hpp"
#include "elastic/errors.hpp"
#include "elastic/sim_core.hpp"

namespace elastic {

struct AgentWeights {
  std::vector<double> alpha;
};

// alpha_i = share_i * prio_i / sum_j share_j * prio_j, uniform when every share is zero.
inline AgentWeights compute_alpha(std::span<const double> load_share, std::span<const int> priority) {
  if (load_share.size() != priority.size()) throw InputError("load_share and priority lengths differ");
  if (load_share.empty()) throw InputError("compute_alpha needs at least one agent");
  double share_sum = 0.0;
  for (double s : load_share) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("load shares must be finite and >= 0");
    share_sum += s;
  }
  for (int p : priority)
    if (p < 1) throw InputError("priorities must be >= 1");
  if (share_sum != 0.0 && std::abs(share_sum - 1.0) > 1e-9)
    throw InputError("load shares must sum to 1, got " + std::to_string(share_sum));

  const std::size_t n = load_share.size();
  AgentWeights w{std::vector<double>(n)};
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) denom += load_share[i] * static_cast<double>(priority[i]);
  if (denom == 0.0) {
    for (auto& a : w.alpha) a = 1.0 / static_cast<double>(n);
    return w;
  }
  for (std::size_t i = 0; i < n; ++i) w.alpha[i] = load_share[i] * static_cast<double>(priority[i]) / denom;
  return w;
}

// Each pool's share of total CPU in use; all zeros when the cluster is idle.
inline std::vector<double> load_shares(const ClusterSnapshot& snap) {
  std::vector<double> share(snap.pools.size(), 0.0);
  double total = 0.0;
  for (const auto& p : snap.pools) total += p.cpu_used;
  if (total <= 0.0) return share;
  for (std::size_t i = 0; i < share.size(); ++i) share[i] = snap.pools[i].cpu_used / total;
  return share;
}

// Aggregate signal step_size * sum_i alpha_i * a_i; |result| <= step_size.
inline double delta_R(std::span<const ActionChoice> joint_action, const AgentWeights& weights, double step_size) {
  if (joint_action.size() != weights.alpha.size()) throw InputError("joint action and weights lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < joint_action.size(); ++i)
    sum += weights.alpha[i] * static_cast<double>(to_numeric(joint_action[i]));
  // alpha sums to 1, so |sum| <= 1 up to rounding.
  return step_size * std::clamp(sum, -1.0, 1.0);
}

struct ScaleQuanta {
  double cpu_step = 1.0;
  double mem_step = 1.0;
};

struct ScalingOutcome {
  double delta_R = 0.0;
  std::vector<double> cpu_capacity;
  std::vector<double> mem_capacity;
};

// Every pool moves its own capacity by a_i quanta (clamped to bounds, floored at
// current usage). The aggregate signal is computed and returned for recording only.
inline ScalingOutcome apply_delta(std::span<ResourcePool> pools, std::span<const ActionChoice> joint_action,
                                  const AgentWeights& weights, const ScaleQuanta& quanta) {
  if (pools.size() != joint_action.size()) throw InputError("one action per pool required");
  ScalingOutcome out;
  out.delta_R = delta_R(joint_action, weights, quanta.cpu_step);
  out.cpu_capacity.reserve(pools.size());
  out.mem_capacity.reserve(pools.size());
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const double a = static_cast<double>(to_numeric(joint_action[i]));
    auto& p = pools[i];
    if (a != 0.0) p.set_capacity(p.cpu_capacity() + a * quanta.cpu_step, p.mem_capacity() + a * quanta.mem_step);
    out.cpu_capacity.push_back(p.cpu_capacity());
    out.mem_capacity.push_back(p.mem_capacity());
  }
  return out;
}

}  // namespace elastic
