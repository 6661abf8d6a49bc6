#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedrand/analysis.hpp"
#include "schedrand/rng.hpp"
#include "schedrand/task.hpp"

namespace schedrand {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Candidate periods: divisors of 3000 not smaller than 10, so every generated
// set shares the common hyper-period 3000.
inline const std::vector<slot_t>& period_pool() {
  static const std::vector<slot_t> pool = [] {
    std::vector<slot_t> p;
    for (slot_t d = 10; d <= 3000; ++d)
      if (3000 % d == 0) p.push_back(d);
    return p;
  }();
  return pool;
}

struct GenConfig {
  int group = 0;       // utilization group i: base utilization in [0.02+0.1i, 0.08+0.1i]
  int task_count = 5;  // tasks per set
  int max_attempts = 200000;
};

inline double group_low(int group) { return 0.02 + 0.1 * group; }
inline double group_high(int group) { return 0.08 + 0.1 * group; }

// Rejection sampling: draw a target utilization in the group interval, split
// it across tasks by uniform stick-breaking, realize each share with a pooled
// period and a rounded execution time in [1, min(50, p-1)], and accept only
// if the realized base utilization stays in the interval and the set passes
// the response-time test under rate-monotonic priorities.
inline TaskSet generate_taskset(const GenConfig& cfg, Rng& rng, std::string name = {}) {
  if (cfg.group < 0 || cfg.group > 9) throw ConfigError("utilization group must be 0..9");
  if (cfg.task_count < 1) throw ConfigError("task_count must be >= 1");
  const double lo = group_low(cfg.group);
  const double hi = group_high(cfg.group);
  const auto& pool = period_pool();

  std::vector<double> cuts;
  std::vector<TaskSpec> specs;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const double target = lo + (hi - lo) * rng.next_double();
    cuts.clear();
    for (int i = 0; i + 1 < cfg.task_count; ++i) cuts.push_back(target * rng.next_double());
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(target);

    specs.clear();
    double prev = 0;
    double base = 0;
    for (int i = 0; i < cfg.task_count; ++i) {
      const double share = cuts[std::size_t(i)] - prev;
      prev = cuts[std::size_t(i)];
      const slot_t p = pool[rng.next_below(pool.size())];
      slot_t e = slot_t(std::llround(share * double(p)));
      e = std::max<slot_t>(1, std::min({e, slot_t{50}, p - 1}));
      specs.push_back(TaskSpec{i, p, e, p, 0});
      base += double(e) / double(p);
    }
    if (base < lo || base > hi) continue;
    assign_rm_priorities(specs);
    TaskSet ts(specs, name);
    bool ok = true;
    for (std::size_t i = 0; ok && i < ts.size(); ++i) ok = response_time(ts, i).has_value();
    if (ok) return ts;
  }
  throw GenerationError("task-set generation failed after " +
                        std::to_string(cfg.max_attempts) + " attempts (group " +
                        std::to_string(cfg.group) + ", " + std::to_string(cfg.task_count) +
                        " tasks)");
}

}  // namespace schedrand
