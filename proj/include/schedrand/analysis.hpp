#pragma once

#include <optional>
#include <vector>

#include "schedrand/task.hpp"

namespace schedrand {

inline slot_t ceil_div_pos(slot_t a, slot_t b) { return (a + b - 1) / b; }

// Iterative response-time analysis. `inflate` is added to the task's own
// execution demand (used by the max-slack search). Returns the fixed point,
// or nullopt once the iteration exceeds the deadline.
inline std::optional<slot_t> response_time(const TaskSet& ts, std::size_t i,
                                           slot_t inflate = 0) {
  const slot_t base = ts[i].wcet + inflate;
  slot_t w = base;
  if (w > ts[i].deadline) return std::nullopt;
  for (;;) {
    slot_t next = base;
    for (std::size_t j = 0; j < i; ++j)
      next += ceil_div_pos(w, ts[j].period) * ts[j].wcet;
    if (next == w) return w;
    if (next > ts[i].deadline) return std::nullopt;
    w = next;
  }
}

// Worst-case maximum inversion budget V_i of the TS baseline: deadline minus
// own execution minus worst-case interference inflated by one extra deferred
// job per higher-priority task. May be negative; a negative value activates
// the level-exclusion rule at run time.
inline slot_t ts_max_inversion_budget(const TaskSet& ts, std::size_t i) {
  slot_t v = ts[i].deadline - ts[i].wcet;
  for (std::size_t j = 0; j < i; ++j)
    v -= (ceil_div_pos(ts[i].deadline, ts[j].period) + 1) * ts[j].wcet;
  return v;
}

// Maximum slack V̄_i: the largest q such that the task still meets its
// deadline with its execution inflated to e + q under synchronous release.
// Non-negative for every task of a schedulable set; -1 if the task itself is
// unschedulable. The search is linear; the space is bounded by d - e.
inline slot_t max_slack(const TaskSet& ts, std::size_t i) {
  if (!response_time(ts, i)) return -1;
  slot_t q = 0;
  while (q < ts[i].deadline - ts[i].wcet && response_time(ts, i, q + 1)) ++q;
  return q;
}

struct TaskAnalysis {
  std::optional<slot_t> wcrt;  // empty: response time exceeds the deadline
  slot_t inv_budget = 0;       // V_i (TS baseline)
  slot_t max_slack = 0;        // V̄_i (tspp-approx), -1 if unschedulable
};

struct StaticAnalysis {
  std::vector<TaskAnalysis> tasks;
  bool schedulable = false;
};

inline StaticAnalysis analyze(const TaskSet& ts) {
  StaticAnalysis res;
  res.tasks.resize(ts.size());
  res.schedulable = true;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    res.tasks[i].wcrt = response_time(ts, i);
    res.schedulable = res.schedulable && res.tasks[i].wcrt.has_value();
    res.tasks[i].inv_budget = ts_max_inversion_budget(ts, i);
    res.tasks[i].max_slack = max_slack(ts, i);
  }
  return res;
}

}  // namespace schedrand
