#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "schedrand/metrics.hpp"

namespace schedrand {

// Raised when a task set exceeds the enumeration caps or the chain does not
// settle within the horizon; callers should fall back to Monte Carlo.
class OracleCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleLimits {
  std::size_t max_tasks = 3;
  slot_t max_hyper_period = 200;
  slot_t max_hyper_periods = 500;  // convergence horizon
  std::size_t max_states = 200000;
  double tolerance = 1e-12;  // boundary-distribution convergence and mass drift
};

namespace detail {

// Canonical state key: residues plus whichever budget the policy consults,
// with budgets of inactive tasks normalized away (they are re-initialized at
// release, so stale values must not split equivalent states). Everything
// else in SchedState is either derived from (now, residues) under the WCET
// model or irrelevant to decisions.
inline std::vector<slot_t> oracle_key(const SchedState& st, Policy policy) {
  std::vector<slot_t> key;
  key.reserve(st.tasks.size() * 2);
  for (const auto& rt : st.tasks) key.push_back(rt.residue);
  if (policy == Policy::ts) {
    for (const auto& rt : st.tasks) key.push_back(rt.active() ? rt.ts_budget : 0);
  } else if (policy == Policy::tspp_approx) {
    for (const auto& rt : st.tasks) key.push_back(rt.active() ? rt.inv_budget : 0);
  }
  return key;
}

}  // namespace detail

// Exact per-slot marginals Pr(x_t = task) for tiny task sets, by forward
// propagation of probability mass through the policy's decision tree with
// per-layer merging of equivalent states. WCET execution model only.
// Propagates hyper-period by hyper-period until the start-of-hyper-period
// state distribution settles, then reports the stationary marginals.
inline SlotDistribution exact_slot_distribution(const TaskSet& ts,
                                                const StaticAnalysis& an, Policy policy,
                                                Selection selection,
                                                const OracleLimits& lim = {}) {
  if (ts.size() > lim.max_tasks)
    throw OracleCapError("oracle cap: " + std::to_string(ts.size()) + " tasks > " +
                         std::to_string(lim.max_tasks));
  if (ts.hyper_period() > lim.max_hyper_period)
    throw OracleCapError("oracle cap: hyper-period " + std::to_string(ts.hyper_period()) +
                         " > " + std::to_string(lim.max_hyper_period));
  if (policy != Policy::fp && !an.schedulable)
    throw ConfigError("randomizing policies require a statically schedulable task set");

  const slot_t L = ts.hyper_period();
  const int n = int(ts.size());
  const int idle = ts.idle_index();

  struct Node {
    SchedState state;
    double mass;
  };
  using Layer = std::map<std::vector<slot_t>, Node>;

  Layer layer;
  {
    SchedState init = initial_state(ts);
    layer.emplace(detail::oracle_key(init, policy), Node{std::move(init), 1.0});
  }
  std::map<std::vector<slot_t>, double> prev_boundary;
  for (const auto& [key, node] : layer) prev_boundary[key] = node.mass;

  SlotDistribution dist;
  dist.period = L;
  dist.task_count = n;
  dist.sample_count = 0;
  dist.pr.assign(std::size_t(L) * std::size_t(n + 1), 0.0);

  CandidateList cand;
  std::vector<double> probs;
  std::vector<int> released;
  const auto wcet_draw = [&](std::size_t i) { return ts[i].wcet; };

  for (slot_t hp = 0; hp < lim.max_hyper_periods; ++hp) {
    std::fill(dist.pr.begin(), dist.pr.end(), 0.0);
    for (slot_t s = 0; s < L; ++s) {
      Layer next;
      double mass_out = 0;
      for (const auto& [key, node] : layer) {
        SchedState st = node.state;
        if (apply_releases(st, ts, an, policy, wcet_draw, released) > 0)
          throw OracleCapError("oracle: deadline miss while enumerating a schedulable set");
        build_candidates(policy, st, ts, an, cand);
        selection_probs(cand, st, ts, selection, probs);
        for (std::size_t k = 0; k < cand.size(); ++k) {
          if (probs[k] <= 0) continue;
          const double m = node.mass * probs[k];
          SchedState nx = st;
          apply_dispatch(nx, ts, policy, cand[k]);
          dist.at(s, cand[k] == idle ? n : cand[k]) += m;
          mass_out += m;
          auto nkey = detail::oracle_key(nx, policy);
          auto it = next.find(nkey);
          if (it == next.end())
            next.emplace(std::move(nkey), Node{std::move(nx), m});
          else
            it->second.mass += m;
        }
      }
      if (next.size() > lim.max_states)
        throw OracleCapError("oracle cap: state layer exceeded " +
                             std::to_string(lim.max_states) + " states");
      if (std::fabs(mass_out - 1.0) > 1e-9)
        throw OracleCapError("oracle: probability mass drifted beyond tolerance");
      for (auto& [key, node] : next) node.mass /= mass_out;
      layer.swap(next);
    }
    // layer now sits at a hyper-period boundary, before release processing
    std::map<std::vector<slot_t>, double> boundary;
    for (const auto& [key, node] : layer) boundary[key] = node.mass;
    double linf = 0;
    for (const auto& [key, mass] : boundary) {
      auto it = prev_boundary.find(key);
      linf = std::max(linf, std::fabs(mass - (it == prev_boundary.end() ? 0.0 : it->second)));
    }
    for (const auto& [key, mass] : prev_boundary)
      if (!boundary.count(key)) linf = std::max(linf, mass);
    prev_boundary = std::move(boundary);
    if (linf < lim.tolerance) return dist;  // the hyper-period just recorded is stationary
  }
  throw OracleCapError("oracle: boundary distribution did not converge within horizon");
}

}  // namespace schedrand
