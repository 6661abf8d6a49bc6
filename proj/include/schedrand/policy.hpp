#pragma once

#include <cassert>
#include <numeric>
#include <optional>
#include <string_view>
#include <vector>

#include "schedrand/analysis.hpp"
#include "schedrand/rng.hpp"
#include "schedrand/sched_state.hpp"

namespace schedrand {

enum class Policy { fp, ts, tspp_exact, tspp_approx };
enum class Selection { uniform, weighted };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::fp: return "fp";
    case Policy::ts: return "ts";
    case Policy::tspp_exact: return "tspp-exact";
    case Policy::tspp_approx: return "tspp-approx";
  }
  return "?";
}

inline const char* to_string(Selection s) {
  return s == Selection::uniform ? "uniform" : "weighted";
}

inline std::optional<Policy> parse_policy(std::string_view s) {
  if (s == "fp") return Policy::fp;
  if (s == "ts") return Policy::ts;
  if (s == "tspp-exact") return Policy::tspp_exact;
  if (s == "tspp-approx") return Policy::tspp_approx;
  return std::nullopt;
}

inline std::optional<Selection> parse_selection(std::string_view s) {
  if (s == "uniform") return Selection::uniform;
  if (s == "weighted") return Selection::weighted;
  return std::nullopt;
}

// Candidate jobs for one slot, in priority order (highest first). Entries are
// priority positions; the idle pseudo-task appears as ts.idle_index(). Every
// list is a contiguous prefix of the priority-ordered ready queue extended by
// idle.
using CandidateList = std::vector<int>;

// ceil(x / p), lower-bounded by zero.
inline slot_t ceil_div0(slot_t x, slot_t p) { return x <= 0 ? 0 : (x + p - 1) / p; }

// Level-h busy interval W_{h,t}(w): the window starting at `now` that holds a
// priority inversion of size w, all outstanding work of hp(h) (and of h
// itself if active), and every future hp job arriving before the window
// closes. When h is inactive its upcoming job joins the recurrence instead of
// the base term. Returns nullopt instead of diverging (cutoff 2L).
inline std::optional<slot_t> busy_interval(const SchedState& st, const TaskSet& ts,
                                           std::size_t h, slot_t w) {
  const bool h_active = st.tasks[h].active();
  slot_t base = w;
  for (std::size_t j = 0; j < h; ++j) base += st.tasks[j].residue;
  if (h_active) base += st.tasks[h].residue;
  const std::size_t recur_end = h_active ? h : h + 1;
  const slot_t cutoff = 2 * ts.hyper_period();
  slot_t cur = base;
  if (cur > cutoff) return std::nullopt;
  for (;;) {
    slot_t next = base;
    for (std::size_t j = 0; j < recur_end; ++j)
      next += ceil_div0(cur - st.release_offset(ts, j), ts[j].period) * ts[j].wcet;
    if (next == cur) return cur;
    if (next > cutoff) return std::nullopt;
    cur = next;
  }
}

// Exact schedulability test: a priority inversion of size w at `now` keeps
// task h within its effective deadline iff the worst-case busy interval ends
// by it.
inline bool inversion_safe_exact(const SchedState& st, const TaskSet& ts,
                                 std::size_t h, slot_t w) {
  const auto window = busy_interval(st, ts, h, w);
  return window && st.now + *window <= effective_deadline(st.tasks[h], ts[h]);
}

// Test I-1: the busy interval of initial size w ends before or on inactive
// h's earliest next arrival. Sufficient, not necessary.
inline bool test_i1(const SchedState& st, const TaskSet& ts, std::size_t h, slot_t w) {
  const slot_t o_h = st.release_offset(ts, h);
  slot_t lhs = w;
  for (std::size_t j = 0; j < h; ++j) {
    lhs += st.tasks[j].residue;
    lhs += ceil_div0(o_h - st.release_offset(ts, j), ts[j].period) * ts[j].wcet;
    if (lhs > o_h) return false;
  }
  return lhs <= o_h;
}

// Overflow bound rho-bar: worst-case total residue of hp(h) at inactive h's
// next release t' = now + o_h. Arrivals inside [now, t') count at full WCET,
// carried residues otherwise, minus the guaranteed progress after the latest
// such arrival. With no arrival inside the window the bound degenerates to
// the plain residue sum. Floored at zero.
inline slot_t overflow_bound(const SchedState& st, const TaskSet& ts, std::size_t h) {
  const slot_t o_h = st.release_offset(ts, h);
  slot_t sum = 0;
  slot_t r_star = -1;  // offset of the latest release in [now, t'), -1 if none
  for (std::size_t j = 0; j < h; ++j) {
    const slot_t o_j = st.release_offset(ts, j);
    if (o_j < o_h) {
      sum += ts[j].wcet;
      const slot_t last = o_j + ((o_h - o_j) / ts[j].period) * ts[j].period;
      r_star = std::max(r_star, last);
    } else {
      sum += st.tasks[j].residue;
    }
  }
  if (r_star >= 0) sum -= o_h - r_star;
  return std::max<slot_t>(sum, 0);
}

// Test I-2: the predicted overflow must fit within h's maximum slack,
// otherwise no priority inversion is allowed by anything below h.
inline bool test_i2(const SchedState& st, const TaskSet& ts, const StaticAnalysis& an,
                    std::size_t h) {
  return overflow_bound(st, ts, h) <= an.tasks[h].max_slack;
}

// Remaining inversion budget v_h at h's release: deadline minus own execution
// minus the projected interference from hp(h) over [now, now + d_h), using
// the carried residues, the full jobs arriving in the window and the final
// partial job. Call only after all simultaneous releases have been applied.
inline slot_t init_inversion_budget(const SchedState& st, const TaskSet& ts,
                                    std::size_t h) {
  const slot_t d_h = ts[h].deadline;
  slot_t interference = 0;
  for (std::size_t j = 0; j < h; ++j) {
    const slot_t o_j = st.release_offset(ts, j);
    const slot_t p_j = ts[j].period;
    const slot_t e_j = ts[j].wcet;
    const slot_t full = d_h >= o_j ? (d_h - o_j) / p_j : 0;
    slot_t partial = d_h - (o_j + full * p_j);
    if (partial < 0) partial = 0;
    if (partial > e_j) partial = e_j;
    interference += st.tasks[j].residue + full * e_j + partial;
  }
  return d_h - ts[h].wcet - interference;
}

// FP: the highest-priority ready job, or idle.
inline void candidates_fp(const SchedState& st, const TaskSet& ts, CandidateList& out) {
  out.clear();
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (st.tasks[i].active()) {
      out.push_back(int(i));
      return;
    }
  out.push_back(ts.idle_index());
}

// Exact candidate construction: walk the ready queue (idle appended) from the
// highest priority; the first job is always admitted; each later job requires
// the exact test for every not-yet-validated higher-priority task. The walk
// stops at the first failure, and each task is tested at most once per slot
// (a passed test covers every later candidate, since the analysis depends
// only on the inversion size). In run-to-completion mode the inversion size
// is the candidate's residue, which breaks that reuse, so every candidate
// re-tests its full prefix.
inline void candidates_exact(const SchedState& st, const TaskSet& ts, CandidateList& out,
                             bool run_to_completion = false) {
  out.clear();
  const std::size_t n = ts.size();
  std::size_t next_untested = 0;
  for (std::size_t c = 0; c <= n; ++c) {
    if (c < n && !st.tasks[c].active()) continue;
    const int pos = c < n ? int(c) : ts.idle_index();
    if (out.empty()) {
      out.push_back(pos);
      continue;
    }
    if (run_to_completion) {
      const slot_t w = c < n ? st.tasks[c].residue : 1;
      for (std::size_t h = 0; h < c; ++h)
        if (!inversion_safe_exact(st, ts, h, w)) return;
    } else {
      for (std::size_t h = next_untested; h < c; ++h)
        if (!inversion_safe_exact(st, ts, h, 1)) return;
      next_untested = c;
    }
    out.push_back(pos);
  }
}

// Inactive-task tests performed while building an approx candidate list: the
// bound that held for each tested task (rho-bar from Test I-2, 0 when Test
// I-1 already guaranteed an empty overflow). Feeds the simulator's Lemma-1
// style instrumentation.
struct ApproxTestLog {
  std::vector<std::pair<int, slot_t>> inactive_bounds;
};

// Approximate candidate construction: same prefix walk as the exact variant,
// but each higher-priority task is checked with Test A (v >= 1) when active
// and Test I-1 / Test I-2 when inactive.
inline void candidates_approx(const SchedState& st, const TaskSet& ts,
                              const StaticAnalysis& an, CandidateList& out,
                              ApproxTestLog* log = nullptr) {
  out.clear();
  if (log) log->inactive_bounds.clear();
  const std::size_t n = ts.size();
  std::size_t next_untested = 0;
  for (std::size_t c = 0; c <= n; ++c) {
    if (c < n && !st.tasks[c].active()) continue;
    const int pos = c < n ? int(c) : ts.idle_index();
    if (out.empty()) {
      out.push_back(pos);
      continue;
    }
    for (std::size_t h = next_untested; h < c; ++h) {
      if (st.tasks[h].active()) {
        if (st.tasks[h].inv_budget < 1) return;
      } else if (test_i1(st, ts, h, 1)) {
        if (log) log->inactive_bounds.emplace_back(int(h), 0);
      } else {
        const slot_t rho = overflow_bound(st, ts, h);
        if (rho > an.tasks[h].max_slack) return;
        if (log) log->inactive_bounds.emplace_back(int(h), rho);
      }
    }
    next_untested = c;
    out.push_back(pos);
  }
}

// TS baseline: a candidate below some task x is admitted only while every
// active task above it still has inversion budget, and never below a task x
// with V_x < 0 while anything above x has an unfinished job (level-x
// exclusion).
inline void candidates_ts(const SchedState& st, const TaskSet& ts,
                          const StaticAnalysis& an, CandidateList& out) {
  out.clear();
  const std::size_t n = ts.size();
  std::size_t checked = 0;
  bool seen_active = false;
  for (std::size_t c = 0; c <= n; ++c) {
    if (c < n && !st.tasks[c].active()) continue;
    const int pos = c < n ? int(c) : ts.idle_index();
    if (out.empty()) {
      out.push_back(pos);
      continue;
    }
    for (; checked < c; ++checked) {
      if (st.tasks[checked].active() && st.tasks[checked].ts_budget < 1) return;
      if (an.tasks[checked].inv_budget < 0 && seen_active) return;
      seen_active = seen_active || st.tasks[checked].active();
    }
    out.push_back(pos);
  }
}

inline void build_candidates(Policy policy, const SchedState& st, const TaskSet& ts,
                             const StaticAnalysis& an, CandidateList& out,
                             ApproxTestLog* log = nullptr,
                             bool run_to_completion = false) {
  switch (policy) {
    case Policy::fp: candidates_fp(st, ts, out); return;
    case Policy::ts: candidates_ts(st, ts, an, out); return;
    case Policy::tspp_exact: candidates_exact(st, ts, out, run_to_completion); return;
    case Policy::tspp_approx: candidates_approx(st, ts, an, out, log); return;
  }
}

// Selection weights. Uniform gives every candidate the same weight. Weighted
// uses the remaining utilization u = e~ / (d - t); idle's weight is its
// remaining capacity over the rest of the hyper-period. A zero total falls
// back to uniform.
inline void selection_weights(const CandidateList& cand, const SchedState& st,
                              const TaskSet& ts, Selection sel,
                              std::vector<double>& out) {
  out.assign(cand.size(), 1.0);
  if (sel == Selection::uniform) return;
  double total = 0;
  for (std::size_t k = 0; k < cand.size(); ++k) {
    double u;
    if (cand[k] == ts.idle_index()) {
      const slot_t into_hp = st.now % ts.hyper_period();
      const slot_t left = ts.hyper_period() - into_hp;
      const slot_t idle_left = std::max<slot_t>(ts.idle_capacity() - st.idle_used_hp, 0);
      u = double(idle_left) / double(left);
    } else {
      const TaskRuntime& rt = st.tasks[cand[k]];
      const slot_t horizon = rt.last_release + ts[cand[k]].deadline - st.now;
      assert(horizon > 0);
      u = double(rt.residue) / double(horizon);
    }
    out[k] = u;
    total += u;
  }
  if (total <= 0) out.assign(cand.size(), 1.0);
}

// Normalized selection probabilities (used by the exact oracle).
inline void selection_probs(const CandidateList& cand, const SchedState& st,
                            const TaskSet& ts, Selection sel,
                            std::vector<double>& out) {
  selection_weights(cand, st, ts, sel, out);
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& w : out) w /= total;
}

// Picks one candidate. Draws exactly one value from the stream per decision,
// including single-candidate lists.
inline int select(const CandidateList& cand, const std::vector<double>& weights,
                  Rng& rng) {
  assert(!cand.empty() && cand.size() == weights.size());
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double target = rng.next_double() * total;
  double acc = 0;
  for (std::size_t k = 0; k < cand.size(); ++k) {
    acc += weights[k];
    if (target < acc) return cand[k];
  }
  return cand.back();
}

inline int select(const CandidateList& cand, const SchedState& st, const TaskSet& ts,
                  Selection sel, Rng& rng) {
  std::vector<double> weights;
  selection_weights(cand, st, ts, sel, weights);
  return select(cand, weights, rng);
}

}  // namespace schedrand
