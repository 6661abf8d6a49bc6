#pragma once

#include <vector>

#include "schedrand/task.hpp"

namespace schedrand {

constexpr int kNoTask = -1;  // "nothing ran yet" marker

// Run-time bookkeeping for one task. Scheduler-visible quantities are
// WCET-based; actual_remaining carries the job's true remaining work, which
// the scheduler does not see when execution times vary.
struct TaskRuntime {
  slot_t last_release = 0;      // r: most recent release time
  slot_t residue = 0;           // e~: WCET minus slots executed since release
  slot_t actual_remaining = 0;  // true remaining work of the current job
  slot_t inv_budget = 0;        // v: remaining inversion budget (tspp-approx)
  slot_t ts_budget = 0;         // TS baseline inversion budget

  bool active() const { return residue > 0; }
};

// Scheduler state at a slot boundary, after release processing. The ready
// queue is implicit: tasks are stored in priority order, so the ready queue
// is the subsequence with residue > 0.
struct SchedState {
  slot_t now = 0;
  std::vector<TaskRuntime> tasks;    // indexed by priority position
  int previously_running = kNoTask;  // position or idle; context-switch accounting only
  slot_t idle_used_hp = 0;           // idle slots consumed in the current hyper-period

  bool active(std::size_t i) const { return tasks[i].active(); }

  // o_{i,t}: offset of task i's earliest next release from now.
  slot_t release_offset(const TaskSet& ts, std::size_t i) const {
    return tasks[i].last_release + ts[i].period - now;
  }
};

// Effective deadline: the current job's deadline if the task is active, the
// upcoming job's deadline otherwise (assuming minimum inter-arrival time).
inline slot_t effective_deadline(const TaskRuntime& rt, const TaskSpec& spec) {
  return rt.active() ? rt.last_release + spec.deadline
                     : rt.last_release + spec.period + spec.deadline;
}

}  // namespace schedrand
