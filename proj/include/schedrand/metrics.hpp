#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "schedrand/simulate.hpp"

namespace schedrand {

// Pr(x_t = task) over one hyper-period, tasks in priority order with idle as
// the last column. sample_count is the number of hyper-periods behind an
// estimate; 0 marks an exact (oracle) result.
struct SlotDistribution {
  slot_t period = 0;
  int task_count = 0;
  slot_t sample_count = 0;
  std::vector<double> pr;  // period rows x (task_count + 1) columns

  double at(slot_t t, int x) const {
    return pr[std::size_t(t) * std::size_t(task_count + 1) + std::size_t(x)];
  }
  double& at(slot_t t, int x) {
    return pr[std::size_t(t) * std::size_t(task_count + 1) + std::size_t(x)];
  }
};

// Empirical per-slot frequencies, folding absolute slots modulo the
// hyper-period.
inline SlotDistribution estimate_distribution(const ScheduleTrace& trace,
                                              const TaskSet& ts) {
  const slot_t L = ts.hyper_period();
  if (trace.slots() == 0 || trace.slots() % L != 0)
    throw ConfigError("trace length must be a positive multiple of the hyper-period");
  const slot_t reps = trace.slots() / L;
  SlotDistribution dist;
  dist.period = L;
  dist.task_count = int(ts.size());
  dist.sample_count = reps;
  dist.pr.assign(std::size_t(L) * std::size_t(ts.size() + 1), 0.0);
  for (slot_t s = 0; s < trace.slots(); ++s)
    dist.at(s % L, trace.executed[std::size_t(s)]) += 1.0;
  for (double& p : dist.pr) p /= double(reps);
  return dist;
}

// H_inf(x_t) = -log2 of the most probable real task; idle is excluded from
// the max. A slot that is idle with certainty has no real task to guess and
// maps to +infinity.
inline double slot_min_entropy(const SlotDistribution& dist, slot_t t) {
  double mx = 0;
  for (int x = 0; x < dist.task_count; ++x) mx = std::max(mx, dist.at(t, x));
  if (mx <= 0) return std::numeric_limits<double>::infinity();
  return -std::log2(mx);
}

// Minimum slot min-entropy over the hyper-period; always-idle slots drop out
// through their +infinity marker.
inline double schedule_min_entropy(const SlotDistribution& dist) {
  double mn = std::numeric_limits<double>::infinity();
  for (slot_t t = 0; t < dist.period; ++t) mn = std::min(mn, slot_min_entropy(dist, t));
  return mn;
}

// Shannon entropy of one slot, idle included in the domain.
inline double slot_shannon_entropy(const SlotDistribution& dist, slot_t t) {
  double h = 0;
  for (int x = 0; x <= dist.task_count; ++x) {
    const double p = dist.at(t, x);
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

// Sum of the per-slot Shannon entropies over the hyper-period.
inline double schedule_shannon_entropy(const SlotDistribution& dist) {
  double h = 0;
  for (slot_t t = 0; t < dist.period; ++t) h += slot_shannon_entropy(dist, t);
  return h;
}

// Upper bound on the schedule min-entropy: -log2 of the largest task
// utilization.
inline double theorem4_bound(const TaskSet& ts) { return -std::log2(ts.max_utilization()); }

struct RangeRatios {
  std::vector<double> per_task;  // (max offset - min offset + 1) / period
  double mean = 0;
};

// Execution range: release-relative offsets of every executed slot, pooled
// across all jobs of a task. Since releases are strictly periodic from slot
// 0, the offset is simply the slot modulo the period.
inline RangeRatios execution_range_ratio(const ScheduleTrace& trace, const TaskSet& ts) {
  const int n = int(ts.size());
  std::vector<slot_t> lo(n, std::numeric_limits<slot_t>::max());
  std::vector<slot_t> hi(n, -1);
  for (slot_t s = 0; s < trace.slots(); ++s) {
    const int x = trace.executed[std::size_t(s)];
    if (x >= n) continue;
    const slot_t off = s % ts[x].period;
    lo[x] = std::min(lo[x], off);
    hi[x] = std::max(hi[x], off);
  }
  RangeRatios r;
  r.per_task.resize(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (hi[i] >= 0) r.per_task[i] = double(hi[i] - lo[i] + 1) / double(ts[i].period);
    r.mean += r.per_task[i];
  }
  r.mean /= double(n);
  return r;
}

struct EntropyReport {
  std::vector<double> slot_min_entropies;
  double schedule_min_entropy = 0;
  double schedule_shannon_entropy = 0;
  double theorem4_bound = 0;
  RangeRatios ranges;  // empty when built from an exact distribution
  double eps = 0;      // schedule min-entropy per context switch
};

inline EntropyReport build_report(const SlotDistribution& dist, const TaskSet& ts,
                                  const ScheduleTrace* trace = nullptr) {
  EntropyReport rep;
  rep.slot_min_entropies.resize(std::size_t(dist.period));
  for (slot_t t = 0; t < dist.period; ++t)
    rep.slot_min_entropies[std::size_t(t)] = slot_min_entropy(dist, t);
  rep.schedule_min_entropy = schedule_min_entropy(dist);
  rep.schedule_shannon_entropy = schedule_shannon_entropy(dist);
  rep.theorem4_bound = theorem4_bound(ts);
  if (trace) {
    rep.ranges = execution_range_ratio(*trace, ts);
    rep.eps = trace->context_switches > 0
                  ? rep.schedule_min_entropy / double(trace->context_switches)
                  : 0.0;
  }
  return rep;
}

}  // namespace schedrand
