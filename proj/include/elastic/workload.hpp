#pragma once

// Arrival streams: a normalized CSV trace schema and seeded synthetic
// generators (steady, diurnal, burst).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <fmt/format.h>

#include "elastic/errors.hpp"
#include "elastic/rng.hpp"
#include "elastic/sim_core.hpp"

namespace elastic {

struct TraceRecord {
  std::int64_t arrival_step = 0;
  int tenant_id = 0;
  double cpu_demand = 1.0;
  double mem_demand = 1.0;
  std::int64_t duration = 1;
  int priority = 1;
  std::int64_t sla_wait_limit = 0;

  bool operator==(const TraceRecord&) const = default;
};

inline constexpr std::string_view kTraceHeader =
    "arrival_step,tenant_id,cpu_demand,mem_demand,duration,priority,sla_wait_limit";

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_number(std::string_view field, std::int64_t row, std::string_view column) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc{} || ptr != last)
    throw ParseError(row, fmt::format("column {}: non-numeric value '{}'", column, field));
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(row, fmt::format("column {}: non-finite value", column));
  }
  return value;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

// Reads a trace in the normalized schema. Malformed rows are rejected, never repaired.
inline std::vector<TraceRecord> parse_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  detail::strip_cr(line);
  if (!line.empty() && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kTraceHeader) throw ParseError(1, fmt::format("header must be exactly '{}'", kTraceHeader));

  std::vector<TraceRecord> records;
  std::int64_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    detail::strip_cr(line);
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw ParseError(row, "empty row");
    }
    const auto fields = detail::split_csv(line);
    if (fields.size() != 7) throw ParseError(row, fmt::format("expected 7 columns, found {}", fields.size()));

    TraceRecord r;
    r.arrival_step = detail::parse_number<std::int64_t>(fields[0], row, "arrival_step");
    r.tenant_id = detail::parse_number<int>(fields[1], row, "tenant_id");
    r.cpu_demand = detail::parse_number<double>(fields[2], row, "cpu_demand");
    r.mem_demand = detail::parse_number<double>(fields[3], row, "mem_demand");
    r.duration = detail::parse_number<std::int64_t>(fields[4], row, "duration");
    r.priority = detail::parse_number<int>(fields[5], row, "priority");
    r.sla_wait_limit = detail::parse_number<std::int64_t>(fields[6], row, "sla_wait_limit");

    if (r.arrival_step < 0) throw ParseError(row, "arrival_step must be >= 0");
    if (r.tenant_id < 0) throw ParseError(row, "tenant_id must be >= 0");
    if (!(r.cpu_demand > 0.0)) throw ParseError(row, "cpu_demand must be > 0");
    if (!(r.mem_demand > 0.0)) throw ParseError(row, "mem_demand must be > 0");
    if (r.duration <= 0) throw ParseError(row, "duration must be > 0");
    if (r.priority < 1) throw ParseError(row, "priority must be >= 1");
    if (r.sla_wait_limit < 0) throw ParseError(row, "sla_wait_limit must be >= 0");
    if (!records.empty() && r.arrival_step < records.back().arrival_step)
      throw ParseError(row, "rows not sorted by arrival_step");
    records.push_back(r);
  }
  return records;
}

// Writes records in the same schema. Doubles use the shortest round-trip form,
// so parse_trace(export_trace(x)) == x.
inline void export_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  out << kTraceHeader << '\n';
  for (const auto& r : records)
    out << fmt::format("{},{},{},{},{},{},{}\n", r.arrival_step, r.tenant_id, r.cpu_demand, r.mem_demand, r.duration,
                       r.priority, r.sla_wait_limit);
}

enum class WorkloadKind { Steady, Diurnal, Burst };

inline std::string_view workload_kind_name(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::Steady: return "steady";
    case WorkloadKind::Diurnal: return "diurnal";
    case WorkloadKind::Burst: return "burst";
  }
  return "?";
}

inline WorkloadKind parse_workload_kind(std::string_view s) {
  if (s == "steady") return WorkloadKind::Steady;
  if (s == "diurnal") return WorkloadKind::Diurnal;
  if (s == "burst") return WorkloadKind::Burst;
  throw ConfigError(fmt::format("unknown workload kind '{}' (valid: steady, diurnal, burst)", s));
}

struct DemandDistribution {
  double cpu_mean = 1.0;
  double cpu_spread = 0.5;
  double mem_mean = 1.0;
  double mem_spread = 0.5;
  double dur_mean = 4.0;
  double dur_spread = 2.0;
};

struct BurstWindow {
  std::int64_t start_step = 0;
  std::int64_t length = 0;
  double multiplier = 1.0;
};

struct SyntheticSpec {
  WorkloadKind kind = WorkloadKind::Steady;
  double base_rate = 1.0;
  std::int64_t horizon = 200;
  int n_tenants = 1;
  DemandDistribution demand{};
  std::optional<BurstWindow> burst{};
  std::uint64_t seed = 0;

  // Per-tenant rate factor (empty = all 1). Used to model an aggressor tenant.
  std::vector<double> tenant_rate_multiplier{};
  // Per-tenant task priority (empty = all 1).
  std::vector<int> tenant_priority{};
  std::int64_t sla_wait_limit = 3;

  void validate() const {
    if (!(base_rate >= 0.0) || !std::isfinite(base_rate)) throw ConfigError("workload.base_rate must be >= 0");
    if (horizon <= 0) throw ConfigError("workload.horizon must be > 0");
    if (n_tenants < 1) throw ConfigError("workload.n_tenants must be >= 1");
    if (burst && !(burst->multiplier >= 1.0)) throw ConfigError("workload.burst.multiplier must be >= 1");
    if (burst && (burst->start_step < 0 || burst->length < 0)) throw ConfigError("workload.burst window must be non-negative");
    if (kind == WorkloadKind::Burst && !burst) throw ConfigError("burst workload needs a burst window");
    if (!tenant_rate_multiplier.empty() && tenant_rate_multiplier.size() != static_cast<std::size_t>(n_tenants))
      throw ConfigError("workload.tenant_rate_multiplier length must equal n_tenants");
    for (double m : tenant_rate_multiplier)
      if (!(m >= 0.0)) throw ConfigError("workload.tenant_rate_multiplier entries must be >= 0");
    if (!tenant_priority.empty() && tenant_priority.size() != static_cast<std::size_t>(n_tenants))
      throw ConfigError("workload.tenant_priority length must equal n_tenants");
    for (int p : tenant_priority)
      if (p < 1) throw ConfigError("workload.tenant_priority entries must be >= 1");
    if (sla_wait_limit < 0) throw ConfigError("workload.sla_wait_limit must be >= 0");
    const auto& d = demand;
    if (!(d.cpu_mean > 0.0) || !(d.mem_mean > 0.0) || !(d.dur_mean >= 1.0) || d.cpu_spread < 0.0 ||
        d.mem_spread < 0.0 || d.dur_spread < 0.0)
      throw ConfigError("workload demand distribution must have positive means and non-negative spreads");
  }
};

// Arrival intensity for one (step, tenant) cell.
inline double arrival_rate(const SyntheticSpec& spec, std::int64_t step, int tenant) {
  double rate = spec.base_rate;
  if (!spec.tenant_rate_multiplier.empty()) rate *= spec.tenant_rate_multiplier[static_cast<std::size_t>(tenant)];
  if (spec.kind == WorkloadKind::Diurnal) {
    const double period = static_cast<double>(spec.horizon) / 2.0;
    rate *= 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(step) / period);
  }
  if (spec.kind == WorkloadKind::Burst && spec.burst) {
    const auto& b = *spec.burst;
    if (step >= b.start_step && step < b.start_step + b.length) rate *= b.multiplier;
  }
  return rate;
}

// Each (step, tenant) cell draws from its own substream, so extending the
// horizon leaves earlier arrivals untouched.
inline std::vector<TraceRecord> generate(const SyntheticSpec& spec) {
  spec.validate();
  const auto& d = spec.demand;
  std::vector<TraceRecord> out;
  for (std::int64_t step = 0; step < spec.horizon; ++step) {
    for (int tenant = 0; tenant < spec.n_tenants; ++tenant) {
      const double rate = arrival_rate(spec, step, tenant);
      if (rate <= 0.0) continue;
      Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(tenant)}));
      const std::uint64_t count = rng.poisson(rate);
      for (std::uint64_t k = 0; k < count; ++k) {
        TraceRecord r;
        r.arrival_step = step;
        r.tenant_id = tenant;
        r.cpu_demand = std::max(rng.uniform(d.cpu_mean - d.cpu_spread, d.cpu_mean + d.cpu_spread), 0.01 * d.cpu_mean);
        r.mem_demand = std::max(rng.uniform(d.mem_mean - d.mem_spread, d.mem_mean + d.mem_spread), 0.01 * d.mem_mean);
        r.duration = std::max<std::int64_t>(
            1, std::llround(rng.uniform(d.dur_mean - d.dur_spread, d.dur_mean + d.dur_spread)));
        r.priority = spec.tenant_priority.empty() ? 1 : spec.tenant_priority[static_cast<std::size_t>(tenant)];
        r.sla_wait_limit = spec.sla_wait_limit;
        out.push_back(r);
      }
    }
  }
  return out;
}

// Tasks grouped by arrival step: schedule[t] holds the tasks arriving at step t.
using ArrivalSchedule = std::vector<std::vector<Task>>;

// Converts records into per-step task lists over [0, horizon). Ids follow
// record order; records at or beyond the horizon are dropped.
inline ArrivalSchedule to_schedule(const std::vector<TraceRecord>& records, std::int64_t horizon) {
  ArrivalSchedule schedule(static_cast<std::size_t>(horizon));
  std::int64_t next_id = 0;
  for (const auto& r : records) {
    if (r.arrival_step >= horizon) continue;
    Task t;
    t.id = next_id++;
    t.arrival_step = r.arrival_step;
    t.cpu_demand = r.cpu_demand;
    t.mem_demand = r.mem_demand;
    t.duration = r.duration;
    t.tenant_id = r.tenant_id;
    t.priority = r.priority;
    t.sla_wait_limit = r.sla_wait_limit;
    schedule[static_cast<std::size_t>(r.arrival_step)].push_back(t);
  }
  return schedule;
}

}  // namespace elastic
