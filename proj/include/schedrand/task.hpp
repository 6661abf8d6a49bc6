#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace schedrand {

// Discrete time. One slot is one scheduling quantum; all decisions happen at
// slot boundaries.
using slot_t = std::int64_t;

// Invalid configuration: task parameters, file contents, CLI arguments.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Static parameters of one periodic task. Priorities are unique within a
// set; a lower value means a higher priority.
struct TaskSpec {
  int id = 0;
  slot_t period = 1;
  slot_t wcet = 1;
  slot_t deadline = 1;  // implicit: always equal to the period
  int priority = 0;

  double utilization() const { return double(wcet) / double(period); }
};

// lcm of the periods, with overflow detection.
inline slot_t hyper_period(const std::vector<slot_t>& periods) {
  slot_t l = 1;
  for (slot_t p : periods) {
    if (p < 1) throw ConfigError("task period must be >= 1");
    const slot_t q = p / std::gcd(l, p);
    if (l > std::numeric_limits<slot_t>::max() / q)
      throw ConfigError("hyper-period overflows the slot type");
    l *= q;
  }
  return l;
}

inline slot_t hyper_period(const std::vector<TaskSpec>& tasks) {
  std::vector<slot_t> periods;
  periods.reserve(tasks.size());
  for (const auto& t : tasks) periods.push_back(t.period);
  return hyper_period(periods);
}

// Rate-monotonic priorities: shorter period first, ties broken by lower id.
inline void assign_rm_priorities(std::vector<TaskSpec>& tasks) {
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (tasks[a].period != tasks[b].period) return tasks[a].period < tasks[b].period;
    return tasks[a].id < tasks[b].id;
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    tasks[order[rank]].priority = int(rank);
}

// A validated, priority-sorted task set plus its derived hyper-period and
// idle capacity. The index of a task is its priority position: index 0 is
// the highest-priority task, hp(i) = [0, i), lp(i) = (i, N). The idle
// pseudo-task sits at position idle_index() == size().
class TaskSet {
 public:
  TaskSet() = default;

  explicit TaskSet(std::vector<TaskSpec> tasks, std::string name = {})
      : name_(std::move(name)), tasks_(std::move(tasks)) {
    if (tasks_.empty()) throw ConfigError("task set is empty");
    std::sort(tasks_.begin(), tasks_.end(),
              [](const TaskSpec& a, const TaskSpec& b) { return a.priority < b.priority; });
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const TaskSpec& t = tasks_[i];
      const std::string tag = "task " + std::to_string(t.id);
      if (t.period < 1) throw ConfigError(tag + ": period must be >= 1");
      if (t.wcet < 1) throw ConfigError(tag + ": wcet must be >= 1");
      if (t.deadline != t.period)
        throw ConfigError(tag + ": implicit deadlines required (deadline == period)");
      if (t.wcet > t.deadline) throw ConfigError(tag + ": wcet exceeds deadline");
      if (i > 0 && tasks_[i - 1].priority == t.priority)
        throw ConfigError("priorities must be distinct (value " +
                          std::to_string(t.priority) + " repeats)");
    }
    hyper_period_ = schedrand::hyper_period(tasks_);
    slot_t demand = 0;
    for (const auto& t : tasks_) demand += t.wcet * (hyper_period_ / t.period);
    idle_capacity_ = hyper_period_ - demand;  // negative iff total utilization > 1
  }

  std::size_t size() const { return tasks_.size(); }
  const TaskSpec& operator[](std::size_t i) const { return tasks_[i]; }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  auto begin() const { return tasks_.begin(); }
  auto end() const { return tasks_.end(); }

  const std::string& name() const { return name_; }
  slot_t hyper_period() const { return hyper_period_; }
  // Idle slots available per hyper-period: L minus the total demand.
  slot_t idle_capacity() const { return idle_capacity_; }
  int idle_index() const { return int(tasks_.size()); }

  double total_utilization() const {
    double u = 0;
    for (const auto& t : tasks_) u += t.utilization();
    return u;
  }

  double max_utilization() const {
    double u = 0;
    for (const auto& t : tasks_) u = std::max(u, t.utilization());
    return u;
  }

 private:
  std::string name_;
  std::vector<TaskSpec> tasks_;
  slot_t hyper_period_ = 0;
  slot_t idle_capacity_ = 0;
};

}  // namespace schedrand
