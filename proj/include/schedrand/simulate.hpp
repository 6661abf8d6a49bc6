#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedrand/policy.hpp"
#include "schedrand/rng.hpp"

namespace schedrand {

enum class ExecModel { wcet, uniform_fraction };

struct SimConfig {
  Policy policy = Policy::fp;
  Selection selection = Selection::uniform;
  slot_t hyper_periods = 1;
  std::uint64_t seed = 0;
  ExecModel exec_model = ExecModel::wcet;
  double exec_low = 1.0;            // lower bound fraction for uniform_fraction
  bool strict_deadlines = false;    // abort on a miss instead of recording it
  bool count_idle_switches = true;  // count switches to/from idle
  bool run_to_completion = false;   // dispatch runs until completion or the next release
};

struct ScheduleTrace {
  std::vector<std::int32_t> executed;  // per slot: priority position, idle = task count
  slot_t deadline_misses = 0;
  slot_t context_switches = 0;

  slot_t slots() const { return slot_t(executed.size()); }
};

// Aggregates from the tspp-approx release-time instrumentation.
struct RunStats {
  long long releases = 0;
  long long v_negative = 0;    // v < 0 at release; must stay 0
  long long v_over_slack = 0;  // v > d - e at release; must stay 0
  slot_t min_v = std::numeric_limits<slot_t>::max();
  double v_ratio_sum = 0.0;  // sum of v / V-bar over releases with V-bar > 0
  long long v_ratio_count = 0;
  long long overflow_checks = 0;      // releases with a committed overflow bound
  long long overflow_violations = 0;  // realized overflow exceeded the bound
};

class DeadlineMissError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-decision hook for property tests and shadow comparisons. `state` is the
// post-release snapshot the policy saw; `dispatched` is a priority position
// (idle = ts.size()).
class SlotObserver {
 public:
  virtual ~SlotObserver() = default;
  virtual void on_decision(const SchedState& /*state*/, const CandidateList& /*candidates*/,
                           const std::vector<double>& /*weights*/, int /*dispatched*/) {}
  virtual void on_release(const SchedState& /*state*/, std::size_t /*task*/,
                          slot_t /*v_init*/) {}
};

inline SchedState initial_state(const TaskSet& ts) {
  SchedState st;
  st.tasks.resize(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i)
    st.tasks[i].last_release = -ts[i].period;  // first release lands on slot 0
  return st;
}

inline bool releases_at(const SchedState& st, const TaskSet& ts, std::size_t i) {
  return st.now == st.tasks[i].last_release + ts[i].period;
}

// Processes every release due at st.now: refills the WCET residue, draws the
// job's actual execution demand via exec_draw(i), and, once all simultaneous
// releases are applied, re-initializes the policy budgets. Returns the number
// of deadline misses detected at the boundary (a job still unfinished when
// its next release is due, since deadlines are implicit).
template <class ExecDraw>
int apply_releases(SchedState& st, const TaskSet& ts, const StaticAnalysis& an,
                   Policy policy, ExecDraw&& exec_draw, std::vector<int>& released) {
  int misses = 0;
  released.clear();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!releases_at(st, ts, i)) continue;
    if (st.tasks[i].residue > 0) ++misses;
    st.tasks[i].last_release = st.now;
    st.tasks[i].residue = ts[i].wcet;
    st.tasks[i].actual_remaining = exec_draw(i);
    released.push_back(int(i));
  }
  if (policy == Policy::ts) {
    for (int i : released) st.tasks[i].ts_budget = an.tasks[i].inv_budget;
  } else if (policy == Policy::tspp_approx) {
    for (int i : released) st.tasks[i].inv_budget = init_inversion_budget(st, ts, i);
  }
  return misses;
}

// Executes one slot of `dispatched` (idle = ts.size()): burns one slot of the
// job (forcing the residue to zero on early completion), charges the
// inversion budgets of every active higher-priority task, advances the clock
// and resets the idle accounting at hyper-period boundaries.
inline void apply_dispatch(SchedState& st, const TaskSet& ts, Policy policy,
                           int dispatched) {
  const int n = int(ts.size());
  if (dispatched == n) {
    ++st.idle_used_hp;
  } else {
    TaskRuntime& rt = st.tasks[dispatched];
    --rt.residue;
    --rt.actual_remaining;
    if (rt.actual_remaining <= 0) rt.residue = 0;
  }
  if (policy == Policy::ts || policy == Policy::tspp_approx) {
    for (int j = 0; j < dispatched; ++j) {
      if (!st.tasks[j].active()) continue;
      if (policy == Policy::ts)
        --st.tasks[j].ts_budget;
      else
        --st.tasks[j].inv_budget;
    }
  }
  st.previously_running = dispatched;
  ++st.now;
  if (st.now % ts.hyper_period() == 0) st.idle_used_hp = 0;
}

inline std::string dump_state(const SchedState& st, const TaskSet& ts) {
  std::ostringstream os;
  os << "t=" << st.now;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const TaskRuntime& rt = st.tasks[i];
    os << " [" << ts[i].id << ": r=" << rt.last_release << " e~=" << rt.residue
       << " rem=" << rt.actual_remaining << " v=" << rt.inv_budget
       << " vts=" << rt.ts_budget << "]";
  }
  return os.str();
}

// Runs one simulation: per slot, process releases, build the candidate list,
// select one job, execute it for one slot. The trace is a pure function of
// (task set, config) including the seed.
inline ScheduleTrace simulate(const TaskSet& ts, const StaticAnalysis& an,
                              const SimConfig& cfg, SlotObserver* observer = nullptr,
                              RunStats* stats = nullptr) {
  if (cfg.hyper_periods < 1) throw ConfigError("hyper_periods must be >= 1");
  if (cfg.exec_model == ExecModel::uniform_fraction &&
      (cfg.exec_low <= 0.0 || cfg.exec_low > 1.0))
    throw ConfigError("execution-time fraction must lie in (0, 1]");
  if (cfg.policy != Policy::fp && !an.schedulable)
    throw ConfigError("randomizing policies require a statically schedulable task set");
  if (cfg.run_to_completion &&
      !(cfg.policy == Policy::fp || cfg.policy == Policy::tspp_exact))
    throw ConfigError("run-to-completion mode supports only fp and tspp-exact");

  const slot_t L = ts.hyper_period();
  const slot_t total = L * cfg.hyper_periods;
  const int n = int(ts.size());
  const int idle = ts.idle_index();
  const bool approx = cfg.policy == Policy::tspp_approx;

  ScheduleTrace trace;
  trace.executed.resize(std::size_t(total));
  SchedState st = initial_state(ts);
  Rng rng(cfg.seed);

  auto exec_draw = [&](std::size_t i) -> slot_t {
    if (cfg.exec_model == ExecModel::wcet) return ts[i].wcet;
    const slot_t e = ts[i].wcet;
    const slot_t lo = std::max<slot_t>(1, slot_t(std::ceil(cfg.exec_low * double(e))));
    return rng.uniform_int(lo, e);
  };

  CandidateList cand;
  cand.reserve(n + 1);
  std::vector<double> weights;
  weights.reserve(n + 1);
  std::vector<int> released;
  released.reserve(n);
  ApproxTestLog test_log;
  // Overflow instrumentation: bound committed by the latest slot whose
  // dispatch actually went below the task, and the release it applies to.
  std::vector<slot_t> pending_bound(ts.size(), 0);
  std::vector<slot_t> pending_release(ts.size(), -1);
  int committed = kNoTask;
  int last_real = kNoTask;

  for (slot_t now = 0; now < total; ++now) {
    if (approx && stats) {
      // realized overflow uses residues of jobs released strictly before now
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if (pending_release[i] != now || !releases_at(st, ts, i)) continue;
        slot_t realized = 0;
        for (std::size_t j = 0; j < i; ++j) realized += st.tasks[j].residue;
        ++stats->overflow_checks;
        if (realized > pending_bound[i]) ++stats->overflow_violations;
        pending_release[i] = -1;
      }
    }
    const int misses = apply_releases(st, ts, an, cfg.policy, exec_draw, released);
    if (misses > 0) {
      trace.deadline_misses += misses;
      if (cfg.strict_deadlines)
        throw DeadlineMissError("deadline miss under " +
                                std::string(to_string(cfg.policy)) + ": " +
                                dump_state(st, ts));
    }
    if (approx && (stats || observer)) {
      for (int i : released) {
        const slot_t v = st.tasks[i].inv_budget;
        if (stats) {
          ++stats->releases;
          if (v < 0) ++stats->v_negative;
          if (v > ts[i].deadline - ts[i].wcet) ++stats->v_over_slack;
          stats->min_v = std::min(stats->min_v, v);
          if (an.tasks[i].max_slack > 0) {
            stats->v_ratio_sum += double(v) / double(an.tasks[i].max_slack);
            ++stats->v_ratio_count;
          }
        }
        if (observer) observer->on_release(st, std::size_t(i), v);
      }
    }

    int dispatched;
    if (cfg.run_to_completion && committed != kNoTask && released.empty() &&
        (committed == idle || st.tasks[committed].active())) {
      dispatched = committed;
    } else {
      build_candidates(cfg.policy, st, ts, an, cand,
                       approx && stats ? &test_log : nullptr, cfg.run_to_completion);
      selection_weights(cand, st, ts, cfg.selection, weights);
      dispatched = select(cand, weights, rng);
      if (observer) observer->on_decision(st, cand, weights, dispatched);
      if (approx && stats) {
        for (const auto& [h, bound] : test_log.inactive_bounds) {
          if (dispatched > h || dispatched == idle) {
            pending_bound[h] = bound;
            pending_release[h] = st.tasks[h].last_release + ts[h].period;
          }
        }
      }
      committed = cfg.run_to_completion ? dispatched : kNoTask;
    }

    trace.executed[std::size_t(now)] = dispatched;
    if (cfg.count_idle_switches) {
      if (st.previously_running != kNoTask && dispatched != st.previously_running)
        ++trace.context_switches;
    } else {
      if (dispatched != idle) {
        if (last_real != kNoTask && dispatched != last_real) ++trace.context_switches;
        last_real = dispatched;
      }
    }
    apply_dispatch(st, ts, cfg.policy, dispatched);
  }
  return trace;
}

}  // namespace schedrand
