#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "schedrand/analysis.hpp"
#include "schedrand/metrics.hpp"
#include "schedrand/task.hpp"

namespace schedrand {

// Floats are serialized rounded to 9 significant digits so that reports stay
// compact and byte-stable.
inline double round9(double x) {
  if (!std::isfinite(x)) return x;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

// JSON has no infinity; always-idle slots serialize their min-entropy as null.
inline nlohmann::json json_number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round9(x);
}

inline TaskSet taskset_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tasks") || !j["tasks"].is_array())
    throw ConfigError("task-set JSON must be an object with a \"tasks\" array");
  std::vector<TaskSpec> specs;
  bool any_priority = false;
  bool all_priority = true;
  int index = 0;
  for (const auto& jt : j["tasks"]) {
    TaskSpec t;
    t.id = jt.value("id", index);
    if (!jt.contains("period") || !jt.contains("wcet"))
      throw ConfigError("each task needs \"period\" and \"wcet\"");
    t.period = jt["period"].get<slot_t>();
    t.wcet = jt["wcet"].get<slot_t>();
    t.deadline = jt.value("deadline", t.period);
    if (jt.contains("priority")) {
      t.priority = jt["priority"].get<int>();
      any_priority = true;
    } else {
      all_priority = false;
    }
    specs.push_back(t);
    ++index;
  }
  for (std::size_t a = 0; a < specs.size(); ++a)
    for (std::size_t b = a + 1; b < specs.size(); ++b)
      if (specs[a].id == specs[b].id)
        throw ConfigError("task ids must be unique (id " + std::to_string(specs[a].id) + ")");
  if (any_priority && !all_priority)
    throw ConfigError("either give every task a priority or none");
  if (!any_priority) assign_rm_priorities(specs);
  return TaskSet(std::move(specs), j.value("name", std::string{}));
}

inline nlohmann::json taskset_to_json(const TaskSet& ts) {
  nlohmann::json j;
  j["name"] = ts.name();
  j["tasks"] = nlohmann::json::array();
  for (const auto& t : ts) {
    j["tasks"].push_back({{"id", t.id},
                          {"period", t.period},
                          {"wcet", t.wcet},
                          {"deadline", t.deadline},
                          {"priority", t.priority}});
  }
  return j;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j;
}

inline TaskSet load_taskset(const std::filesystem::path& path) {
  return taskset_from_json(read_json_file(path));
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// Per-task analysis report: wcrt (null if unschedulable), V, V-bar, utilization.
inline nlohmann::json analysis_to_json(const TaskSet& ts, const StaticAnalysis& an) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["name"] = ts.name();
  j["hyper_period"] = ts.hyper_period();
  j["schedulable"] = an.schedulable;
  j["idle_capacity"] = ts.idle_capacity();
  j["tasks"] = nlohmann::json::array();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    nlohmann::json t;
    t["id"] = ts[i].id;
    t["priority"] = ts[i].priority;
    t["period"] = ts[i].period;
    t["wcet"] = ts[i].wcet;
    t["utilization"] = round9(ts[i].utilization());
    if (an.tasks[i].wcrt)
      t["wcrt"] = *an.tasks[i].wcrt;
    else
      t["wcrt"] = nullptr;
    t["inversion_budget"] = an.tasks[i].inv_budget;
    t["max_slack"] = an.tasks[i].max_slack;
    j["tasks"].push_back(t);
  }
  return j;
}

// Slot-distribution CSV: one row per slot, one column per task id plus idle.
inline std::string distribution_csv(const SlotDistribution& dist, const TaskSet& ts) {
  std::string out = "slot";
  for (const auto& t : ts) out += ",task_" + std::to_string(t.id);
  out += ",idle\n";
  char buf[48];
  for (slot_t t = 0; t < dist.period; ++t) {
    out += std::to_string(t);
    for (int x = 0; x <= dist.task_count; ++x) {
      std::snprintf(buf, sizeof buf, ",%.9g", dist.at(t, x));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

// Trace CSV: slot,task_id with -1 for idle.
inline std::string trace_csv(const ScheduleTrace& trace, const TaskSet& ts) {
  std::string out = "slot,task_id\n";
  for (slot_t s = 0; s < trace.slots(); ++s) {
    const int x = trace.executed[std::size_t(s)];
    out += std::to_string(s);
    out += ',';
    out += std::to_string(x < int(ts.size()) ? ts[std::size_t(x)].id : -1);
    out += '\n';
  }
  return out;
}

inline nlohmann::json report_to_json(const EntropyReport& rep, const TaskSet& ts) {
  nlohmann::json j;
  j["schedule_min_entropy"] = json_number(rep.schedule_min_entropy);
  j["schedule_shannon_entropy"] = json_number(rep.schedule_shannon_entropy);
  j["theorem4_bound"] = json_number(rep.theorem4_bound);
  nlohmann::json slots = nlohmann::json::array();
  for (double h : rep.slot_min_entropies) slots.push_back(json_number(h));
  j["slot_min_entropy"] = std::move(slots);
  if (!rep.ranges.per_task.empty()) {
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t i = 0; i < rep.ranges.per_task.size(); ++i)
      per["task_" + std::to_string(ts[i].id)] = round9(rep.ranges.per_task[i]);
    j["execution_range_ratio"] = {{"per_task", per}, {"mean", round9(rep.ranges.mean)}};
    j["eps"] = json_number(rep.eps);
  }
  return j;
}

}  // namespace schedrand
