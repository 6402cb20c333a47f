#pragma once

// Discrete-time cluster simulator. Each step:
//   1. arrivals are appended to their tenant's pool queue,
//   2. every pool admits from the head of its queue while the head fits,
//   3. running tasks advance one step; finished tasks leave,
//   4. queued tasks whose wait now exceeds their limit are flagged.
// A task is flagged as an SLA violation at most once, either at admission
// (wait > limit) or while still queued. Flagged tasks keep running.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "elastic/errors.hpp"

namespace elastic {

struct Task {
  std::int64_t id = 0;
  std::int64_t arrival_step = 0;
  double cpu_demand = 1.0;
  double mem_demand = 1.0;
  std::int64_t duration = 1;
  int tenant_id = 0;
  int priority = 1;
  std::int64_t sla_wait_limit = 0;

  bool operator==(const Task&) const = default;
};

inline void validate_task(const Task& t) {
  if (!(t.cpu_demand > 0.0) || !std::isfinite(t.cpu_demand))
    throw InputError("task " + std::to_string(t.id) + ": cpu_demand must be positive");
  if (!(t.mem_demand > 0.0) || !std::isfinite(t.mem_demand))
    throw InputError("task " + std::to_string(t.id) + ": mem_demand must be positive");
  if (t.duration <= 0) throw InputError("task " + std::to_string(t.id) + ": duration must be positive");
  if (t.priority < 1) throw InputError("task " + std::to_string(t.id) + ": priority must be >= 1");
  if (t.sla_wait_limit < 0) throw InputError("task " + std::to_string(t.id) + ": sla_wait_limit must be >= 0");
  if (t.tenant_id < 0) throw InputError("task " + std::to_string(t.id) + ": negative tenant_id");
}

struct QueuedTask {
  Task task;
  bool violated = false;
};

struct RunningTask {
  Task task;
  std::int64_t remaining = 0;
  std::int64_t admitted_step = 0;
  bool violated = false;

  std::int64_t wait() const noexcept { return admitted_step - task.arrival_step; }
};

struct CapacityBounds {
  double cpu_min = 1.0;
  double cpu_max = 100.0;
  double mem_min = 1.0;
  double mem_max = 100.0;
};

// One agent's managed capacity plus its FIFO queue.
class ResourcePool {
 public:
  ResourcePool() = default;
  ResourcePool(int pool_id, CapacityBounds bounds, double cpu_capacity, double mem_capacity)
      : pool_id_(pool_id), bounds_(bounds) {
    if (!(bounds.cpu_min > 0.0) || !(bounds.mem_min > 0.0) || bounds.cpu_min > bounds.cpu_max ||
        bounds.mem_min > bounds.mem_max)
      throw InputError("pool " + std::to_string(pool_id) + ": invalid capacity bounds");
    cpu_capacity_ = std::clamp(cpu_capacity, bounds.cpu_min, bounds.cpu_max);
    mem_capacity_ = std::clamp(mem_capacity, bounds.mem_min, bounds.mem_max);
  }

  int pool_id() const noexcept { return pool_id_; }
  const CapacityBounds& bounds() const noexcept { return bounds_; }
  double cpu_capacity() const noexcept { return cpu_capacity_; }
  double mem_capacity() const noexcept { return mem_capacity_; }

  double cpu_used() const noexcept {
    double s = 0.0;
    for (const auto& r : running_) s += r.task.cpu_demand;
    return s;
  }
  double mem_used() const noexcept {
    double s = 0.0;
    for (const auto& r : running_) s += r.task.mem_demand;
    return s;
  }

  const std::deque<QueuedTask>& queue() const noexcept { return queue_; }
  const std::vector<RunningTask>& running() const noexcept { return running_; }
  std::int64_t completed_total() const noexcept { return completed_total_; }

  // Requests new capacities. Values are clamped to the bounds and never drop
  // below what running tasks currently hold (no eviction).
  void set_capacity(double cpu, double mem) noexcept {
    cpu_capacity_ = std::max(std::clamp(cpu, bounds_.cpu_min, bounds_.cpu_max), cpu_used());
    mem_capacity_ = std::max(std::clamp(mem, bounds_.mem_min, bounds_.mem_max), mem_used());
  }

  void check_invariants() const {
    const std::string tag = "pool " + std::to_string(pool_id_) + ": ";
    if (cpu_capacity_ < bounds_.cpu_min || cpu_capacity_ > bounds_.cpu_max)
      throw InvariantError(tag + "cpu capacity outside bounds");
    if (mem_capacity_ < bounds_.mem_min || mem_capacity_ > bounds_.mem_max)
      throw InvariantError(tag + "memory capacity outside bounds");
    if (cpu_used() > cpu_capacity_ * (1.0 + 1e-12)) throw InvariantError(tag + "cpu over-committed");
    if (mem_used() > mem_capacity_ * (1.0 + 1e-12)) throw InvariantError(tag + "memory over-committed");
  }

  void enqueue(const Task& t) {
    if (!queue_.empty()) {
      const Task& tail = queue_.back().task;
      if (std::tie(t.arrival_step, t.id) <= std::tie(tail.arrival_step, tail.id))
        throw InputError("task " + std::to_string(t.id) + " breaks FIFO order in pool " + std::to_string(pool_id_));
    }
    queue_.push_back({t, false});
  }

 private:
  friend int admit_fifo(ResourcePool& pool, std::int64_t step);
  friend struct PoolStepper;

  int pool_id_ = 0;
  CapacityBounds bounds_{};
  double cpu_capacity_ = 1.0;
  double mem_capacity_ = 1.0;
  std::deque<QueuedTask> queue_;
  std::vector<RunningTask> running_;
  std::int64_t completed_total_ = 0;
};

// Admits the longest prefix of the queue whose tasks each fit the remaining
// capacity. Stops at the first task that does not fit. Returns the number admitted.
inline int admit_fifo(ResourcePool& pool, std::int64_t step) {
  double cpu_free = pool.cpu_capacity_ - pool.cpu_used();
  double mem_free = pool.mem_capacity_ - pool.mem_used();
  int admitted = 0;
  while (!pool.queue_.empty()) {
    const QueuedTask& head = pool.queue_.front();
    if (head.task.cpu_demand > cpu_free || head.task.mem_demand > mem_free) break;
    cpu_free -= head.task.cpu_demand;
    mem_free -= head.task.mem_demand;
    pool.running_.push_back({head.task, head.task.duration, step, head.violated});
    pool.queue_.pop_front();
    ++admitted;
  }
  return admitted;
}

struct PoolRecord {
  double cpu_used = 0.0;
  double cpu_capacity = 0.0;
  double mem_used = 0.0;
  double mem_capacity = 0.0;
  std::int64_t queue_length = 0;
  std::int64_t completed_this_step = 0;
  std::int64_t violated_this_step = 0;
  // Mean queueing wait of the tasks that completed this step; 0 when none did.
  double mean_wait_this_step = 0.0;
  // Arrivals routed to this pool during the step.
  std::int64_t arrivals_this_step = 0;

  bool operator==(const PoolRecord&) const = default;
};

struct ClusterSnapshot {
  std::int64_t step = 0;
  std::vector<PoolRecord> pools;

  bool operator==(const ClusterSnapshot&) const = default;
};

inline PoolRecord idle_record(const ResourcePool& p) {
  PoolRecord r;
  r.cpu_used = p.cpu_used();
  r.cpu_capacity = p.cpu_capacity();
  r.mem_used = p.mem_used();
  r.mem_capacity = p.mem_capacity();
  r.queue_length = static_cast<std::int64_t>(p.queue().size());
  return r;
}

// Snapshot of pool state without advancing time (used for the initial observation).
inline ClusterSnapshot snapshot_of(std::span<const ResourcePool> pools, std::int64_t step) {
  ClusterSnapshot s{step, {}};
  s.pools.reserve(pools.size());
  for (const auto& p : pools) s.pools.push_back(idle_record(p));
  return s;
}

struct PoolStepper {
  static PoolRecord advance(ResourcePool& pool, std::int64_t step) {
    PoolRecord rec;
    const std::size_t before = pool.running_.size();
    admit_fifo(pool, step);
    for (std::size_t i = before; i < pool.running_.size(); ++i) {
      RunningTask& r = pool.running_[i];
      if (!r.violated && r.wait() > r.task.sla_wait_limit) {
        r.violated = true;
        ++rec.violated_this_step;
      }
    }

    rec.cpu_used = pool.cpu_used();
    rec.mem_used = pool.mem_used();
    rec.cpu_capacity = pool.cpu_capacity_;
    rec.mem_capacity = pool.mem_capacity_;

    double wait_sum = 0.0;
    auto& running = pool.running_;
    for (auto& r : running) --r.remaining;
    auto done = std::stable_partition(running.begin(), running.end(),
                                      [](const RunningTask& r) { return r.remaining > 0; });
    for (auto it = done; it != running.end(); ++it) {
      ++rec.completed_this_step;
      wait_sum += static_cast<double>(it->wait());
    }
    running.erase(done, running.end());
    pool.completed_total_ += rec.completed_this_step;
    if (rec.completed_this_step > 0) rec.mean_wait_this_step = wait_sum / static_cast<double>(rec.completed_this_step);

    for (auto& q : pool.queue_) {
      if (!q.violated && step - q.task.arrival_step > q.task.sla_wait_limit) {
        q.violated = true;
        ++rec.violated_this_step;
      }
    }
    rec.queue_length = static_cast<std::int64_t>(pool.queue_.size());
    return rec;
  }
};

// Routes tenant ids to pools. An empty map means tenant i -> pool i.
inline int pool_for_tenant(int tenant_id, std::span<const int> tenant_pool, std::size_t n_pools) {
  if (tenant_pool.empty()) {
    if (tenant_id < 0 || static_cast<std::size_t>(tenant_id) >= n_pools)
      throw InputError("unknown tenant_id " + std::to_string(tenant_id));
    return tenant_id;
  }
  if (tenant_id < 0 || static_cast<std::size_t>(tenant_id) >= tenant_pool.size())
    throw InputError("unknown tenant_id " + std::to_string(tenant_id));
  const int p = tenant_pool[static_cast<std::size_t>(tenant_id)];
  if (p < 0 || static_cast<std::size_t>(p) >= n_pools)
    throw InputError("tenant " + std::to_string(tenant_id) + " mapped to missing pool");
  return p;
}

// Advances every pool by one step. Deterministic in its inputs.
inline ClusterSnapshot sim_step(std::span<ResourcePool> pools, std::span<const Task> arrivals, std::int64_t step,
                                std::span<const int> tenant_pool = {}) {
  for (const auto& p : pools) p.check_invariants();

  std::vector<const Task*> ordered;
  ordered.reserve(arrivals.size());
  for (const Task& t : arrivals) {
    validate_task(t);
    if (t.arrival_step > step)
      throw InputError("task " + std::to_string(t.id) + " arrives in the future (step " +
                       std::to_string(t.arrival_step) + " > " + std::to_string(step) + ")");
    pool_for_tenant(t.tenant_id, tenant_pool, pools.size());
    ordered.push_back(&t);
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const Task* a, const Task* b) {
    return std::tie(a->arrival_step, a->id) < std::tie(b->arrival_step, b->id);
  });

  std::vector<std::int64_t> arrivals_per_pool(pools.size(), 0);
  for (const Task* t : ordered) {
    const auto p = static_cast<std::size_t>(pool_for_tenant(t->tenant_id, tenant_pool, pools.size()));
    pools[p].enqueue(*t);
    ++arrivals_per_pool[p];
  }

  ClusterSnapshot snap{step, {}};
  snap.pools.reserve(pools.size());
  for (std::size_t i = 0; i < pools.size(); ++i) {
    PoolRecord rec = PoolStepper::advance(pools[i], step);
    rec.arrivals_this_step = arrivals_per_pool[i];
    snap.pools.push_back(rec);
  }
  return snap;
}

}  // namespace elastic
