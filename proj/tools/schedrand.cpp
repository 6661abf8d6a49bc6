// Experiment harness: corpus generation, policy sweeps, metric aggregation
// and the exact small-instance oracle.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "schedrand/schedrand.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace schedrand;

namespace {

constexpr int kSchemaVersion = 1;

struct ExecTimeSpec {
  ExecModel model = ExecModel::wcet;
  double low = 1.0;
  std::string label = "wcet";
};

ExecTimeSpec parse_exec_time(const std::string& s) {
  if (s == "wcet") return {};
  if (s.rfind("uniform:", 0) == 0) {
    double low = 0;
    try {
      low = std::stod(s.substr(8));
    } catch (const std::exception&) {
      throw ConfigError("--exec-time: cannot parse fraction in '" + s + "'");
    }
    if (!(low > 0.0 && low <= 1.0))
      throw ConfigError("--exec-time: fraction must lie in (0, 1]");
    return {ExecModel::uniform_fraction, low, s};
  }
  throw ConfigError("--exec-time must be 'wcet' or 'uniform:<low>'");
}

std::vector<Policy> parse_policies(const std::vector<std::string>& names) {
  std::vector<Policy> out;
  for (const auto& s : names) {
    auto p = parse_policy(s);
    if (!p) throw ConfigError("unknown policy '" + s + "' (fp|ts|tspp-exact|tspp-approx)");
    if (std::find(out.begin(), out.end(), *p) == out.end()) out.push_back(*p);
  }
  return out;
}

std::vector<Selection> parse_selections(const std::vector<std::string>& names) {
  std::vector<Selection> out;
  for (const auto& s : names) {
    auto v = parse_selection(s);
    if (!v) throw ConfigError("unknown selection '" + s + "' (uniform|weighted)");
    if (std::find(out.begin(), out.end(), *v) == out.end()) out.push_back(*v);
  }
  return out;
}

struct CorpusSet {
  std::string name;
  fs::path file;
  int group = 0;
  int task_count = 0;
  int index = 0;
};

std::vector<CorpusSet> load_corpus(fs::path corpus) {
  if (fs::is_directory(corpus)) corpus /= "manifest.json";
  const json j = read_json_file(corpus);
  if (j.value("kind", "") != "corpus")
    throw ConfigError(corpus.string() + " is not a corpus manifest");
  const fs::path base = corpus.parent_path();
  std::vector<CorpusSet> sets;
  for (const auto& e : j.at("sets")) {
    CorpusSet c;
    c.name = e.at("name").get<std::string>();
    c.file = base / e.at("file").get<std::string>();
    c.group = e.value("group", -1);
    c.task_count = e.value("task_count", 0);
    c.index = e.value("index", 0);
    sets.push_back(std::move(c));
  }
  return sets;
}

// ---------------------------------------------------------------- gen -----

struct GenArgs {
  std::vector<int> groups{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> tasks_per_group{5, 7, 9, 11, 13, 15};
  int sets_per_subgroup = 1;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  fs::create_directories(fs::path(a.out) / "sets");
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = "corpus";
  manifest["seed"] = a.seed;
  manifest["sets"] = json::array();
  int count = 0;
  for (int g : a.groups) {
    for (int n : a.tasks_per_group) {
      for (int k = 0; k < a.sets_per_subgroup; ++k) {
        Rng rng(Rng::derive(a.seed, std::uint64_t(g), std::uint64_t(n), std::uint64_t(k)));
        const std::string name =
            "g" + std::to_string(g) + "_n" + std::to_string(n) + "_s" + std::to_string(k);
        const TaskSet ts = generate_taskset(GenConfig{g, n}, rng, name);
        const std::string rel = "sets/" + name + ".json";
        write_json_file(fs::path(a.out) / rel, taskset_to_json(ts));
        manifest["sets"].push_back({{"name", name},
                                    {"file", rel},
                                    {"group", g},
                                    {"task_count", n},
                                    {"index", k},
                                    {"hyper_period", ts.hyper_period()},
                                    {"base_utilization", round9(ts.total_utilization())},
                                    {"max_utilization", round9(ts.max_utilization())}});
        ++count;
      }
    }
  }
  write_json_file(fs::path(a.out) / "manifest.json", manifest);
  std::cout << "generated " << count << " task sets under " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- run -----

struct RunArgs {
  std::string corpus;
  std::string out;
  std::vector<std::string> policies{"fp", "ts", "tspp-exact", "tspp-approx"};
  std::vector<std::string> selections{"uniform", "weighted"};
  slot_t hyper_periods = 1000;
  std::string exec_time = "wcet";
  std::uint64_t seed = 1;
  unsigned workers = 0;
  bool strict = false;
  bool dump_traces = false;
};

json run_report(const CorpusSet& cs, const TaskSet& ts, const SimConfig& cfg,
                const std::string& exec_label, const ScheduleTrace& trace,
                const SlotDistribution& dist, const RunStats& stats) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["set"] = cs.name;
  j["group"] = cs.group;
  j["task_count"] = int(ts.size());
  j["policy"] = to_string(cfg.policy);
  j["selection"] = to_string(cfg.selection);
  j["seed"] = cfg.seed;
  j["hyper_periods"] = cfg.hyper_periods;
  j["exec_time_model"] = exec_label;
  j["slots"] = trace.slots();
  j["deadline_misses"] = trace.deadline_misses;
  j["context_switches"] = trace.context_switches;
  j["base_utilization"] = round9(ts.total_utilization());
  j["max_utilization"] = round9(ts.max_utilization());
  const EntropyReport rep = build_report(dist, ts, &trace);
  j["metrics"] = report_to_json(rep, ts);
  if (cfg.policy == Policy::tspp_approx) {
    json v;
    v["releases"] = stats.releases;
    v["negative"] = stats.v_negative;
    v["over_slack"] = stats.v_over_slack;
    v["min_v"] = stats.min_v;
    v["mean_ratio"] = stats.v_ratio_count > 0
                          ? json(round9(stats.v_ratio_sum / double(stats.v_ratio_count)))
                          : json(nullptr);
    v["overflow_checks"] = stats.overflow_checks;
    v["overflow_violations"] = stats.overflow_violations;
    j["v_budget"] = std::move(v);
  }
  return j;
}

int cmd_run(const RunArgs& a) {
  const auto policies = parse_policies(a.policies);
  const auto selections = parse_selections(a.selections);
  const ExecTimeSpec exec = parse_exec_time(a.exec_time);
  if (a.hyper_periods < 1) throw ConfigError("--hyper-periods must be >= 1");

  const auto corpus = load_corpus(a.corpus);
  std::vector<TaskSet> sets;
  std::vector<StaticAnalysis> analyses;
  sets.reserve(corpus.size());
  fs::create_directories(fs::path(a.out) / "reports");
  fs::create_directories(fs::path(a.out) / "dist");
  fs::create_directories(fs::path(a.out) / "analysis");
  if (a.dump_traces) fs::create_directories(fs::path(a.out) / "traces");
  for (const auto& cs : corpus) {
    sets.push_back(load_taskset(cs.file));
    analyses.push_back(analyze(sets.back()));
    write_json_file(fs::path(a.out) / "analysis" / (cs.name + ".json"),
                    analysis_to_json(sets.back(), analyses.back()));
    const bool needs_schedulable =
        std::any_of(policies.begin(), policies.end(), [](Policy p) { return p != Policy::fp; });
    if (needs_schedulable && !analyses.back().schedulable)
      throw ConfigError("set " + cs.name + " is not schedulable; randomizing policies refuse it");
  }

  struct Job {
    std::size_t set_idx;
    Policy policy;
    Selection selection;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < corpus.size(); ++s)
    for (Policy p : policies)
      for (Selection sel : selections) jobs.push_back({s, p, sel});

  std::vector<json> rows(jobs.size());
  std::vector<slot_t> misses(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      try {
        const Job& job = jobs[k];
        const CorpusSet& cs = corpus[job.set_idx];
        const TaskSet& ts = sets[job.set_idx];
        SimConfig cfg;
        cfg.policy = job.policy;
        cfg.selection = job.selection;
        cfg.hyper_periods = a.hyper_periods;
        cfg.exec_model = exec.model;
        cfg.exec_low = exec.low;
        cfg.strict_deadlines = a.strict;
        // run index = canonical (policy, selection) pair, independent of sweep order
        cfg.seed = Rng::derive(a.seed, std::uint64_t(job.set_idx),
                               std::uint64_t(int(job.policy) * 2 + int(job.selection)));
        RunStats stats;
        const ScheduleTrace trace = simulate(ts, analyses[job.set_idx], cfg, nullptr, &stats);
        const SlotDistribution dist = estimate_distribution(trace, ts);
        const std::string stem = cs.name + "__" + to_string(job.policy) + "__" +
                                 to_string(job.selection);
        write_json_file(fs::path(a.out) / "reports" / (stem + ".json"),
                        run_report(cs, ts, cfg, exec.label, trace, dist, stats));
        write_text_file(fs::path(a.out) / "dist" / (stem + ".csv"),
                        distribution_csv(dist, ts));
        if (a.dump_traces)
          write_text_file(fs::path(a.out) / "traces" / (stem + ".csv"), trace_csv(trace, ts));
        misses[k] = trace.deadline_misses;
        rows[k] = {{"set", cs.name},
                   {"group", cs.group},
                   {"policy", to_string(job.policy)},
                   {"selection", to_string(job.selection)},
                   {"report", "reports/" + stem + ".json"},
                   {"distribution", "dist/" + stem + ".csv"}};
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  unsigned nworkers = a.workers ? a.workers : std::thread::hardware_concurrency();
  nworkers = std::max(1u, std::min<unsigned>(nworkers, unsigned(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < nworkers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = "runs";
  manifest["corpus"] = a.corpus;
  manifest["seed"] = a.seed;
  manifest["hyper_periods"] = a.hyper_periods;
  manifest["exec_time_model"] = exec.label;
  {
    json pol = json::array(), sel = json::array();
    for (Policy p : policies) pol.push_back(to_string(p));
    for (Selection s : selections) sel.push_back(to_string(s));
    manifest["policies"] = std::move(pol);
    manifest["selections"] = std::move(sel);
  }
  manifest["runs"] = json::array();
  for (auto& r : rows) manifest["runs"].push_back(std::move(r));
  write_json_file(fs::path(a.out) / "manifest.json", manifest);

  const slot_t total_misses = std::accumulate(misses.begin(), misses.end(), slot_t{0});
  std::cout << jobs.size() << " runs written under " << a.out << "\n";
  if (total_misses > 0) {
    std::cerr << "deadline misses detected: " << total_misses
              << " (see per-run reports)\n";
    return 3;
  }
  return 0;
}

// ------------------------------------------------------------- analyze ----

struct AnalyzeArgs {
  std::string runs;
  std::string out;
};

std::string csv_num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

int cmd_analyze(const AnalyzeArgs& a) {
  fs::path manifest_path = a.runs;
  if (fs::is_directory(manifest_path)) manifest_path /= "manifest.json";
  std::vector<json> reports;
  if (fs::exists(manifest_path)) {
    const json manifest = read_json_file(manifest_path);
    if (manifest.value("kind", "") != "runs")
      throw ConfigError(manifest_path.string() + " is not a run manifest");
    const fs::path base = manifest_path.parent_path();
    for (const auto& r : manifest.at("runs"))
      reports.push_back(read_json_file(base / r.at("report").get<std::string>()));
  }

  struct Agg {
    int sets = 0;
    int zero_min_entropy = 0;
    double shannon = 0, min_entropy = 0, range = 0, eps = 0;
    double v_ratio = 0;
    int v_ratio_count = 0;
  };
  std::map<std::tuple<int, std::string, std::string>, Agg> groups;
  std::string scatter = "set,group,policy,selection,max_utilization,schedule_min_entropy\n";
  for (const json& r : reports) {
    const auto key = std::make_tuple(r.value("group", -1), r.at("policy").get<std::string>(),
                                     r.at("selection").get<std::string>());
    Agg& g = groups[key];
    const json& m = r.at("metrics");
    const double hmin =
        m.at("schedule_min_entropy").is_null() ? 0.0 : m.at("schedule_min_entropy").get<double>();
    g.sets += 1;
    g.min_entropy += hmin;
    g.shannon += m.at("schedule_shannon_entropy").get<double>();
    if (hmin < 1e-12) g.zero_min_entropy += 1;
    if (m.contains("execution_range_ratio"))
      g.range += m.at("execution_range_ratio").at("mean").get<double>();
    if (m.contains("eps")) g.eps += m.at("eps").get<double>();
    if (r.contains("v_budget") && !r.at("v_budget").at("mean_ratio").is_null()) {
      g.v_ratio += r.at("v_budget").at("mean_ratio").get<double>();
      g.v_ratio_count += 1;
    }
    scatter += r.at("set").get<std::string>() + "," + std::to_string(r.value("group", -1)) +
               "," + r.at("policy").get<std::string>() + "," +
               r.at("selection").get<std::string>() + "," +
               csv_num(r.at("max_utilization").get<double>()) + "," + csv_num(hmin) + "\n";
  }

  std::string agg =
      "group,policy,selection,sets,mean_schedule_shannon_entropy,mean_schedule_min_entropy,"
      "pct_zero_min_entropy,mean_range_ratio,mean_eps,mean_v_ratio\n";
  for (const auto& [key, g] : groups) {
    const auto& [grp, pol, sel] = key;
    const double n = double(g.sets);
    agg += std::to_string(grp) + "," + pol + "," + sel + "," + std::to_string(g.sets) + "," +
           csv_num(g.shannon / n) + "," + csv_num(g.min_entropy / n) + "," +
           csv_num(100.0 * double(g.zero_min_entropy) / n) + "," + csv_num(g.range / n) + "," +
           csv_num(g.eps / n) + "," +
           (g.v_ratio_count > 0 ? csv_num(g.v_ratio / double(g.v_ratio_count)) : "") + "\n";
  }
  fs::create_directories(a.out);
  write_text_file(fs::path(a.out) / "aggregate.csv", agg);
  write_text_file(fs::path(a.out) / "scatter.csv", scatter);
  std::cout << "aggregated " << reports.size() << " reports into " << a.out << "\n";
  return 0;
}

// -------------------------------------------------------------- oracle ----

struct OracleArgs {
  std::string set;
  std::string out;
  std::string policy = "tspp-exact";
  std::string selection = "uniform";
  slot_t horizon = 500;
  std::size_t max_tasks = 3;
  slot_t max_hyper_period = 200;
};

int cmd_oracle(const OracleArgs& a) {
  const auto policy = parse_policy(a.policy);
  const auto selection = parse_selection(a.selection);
  if (!policy) throw ConfigError("unknown policy '" + a.policy + "'");
  if (!selection) throw ConfigError("unknown selection '" + a.selection + "'");
  const TaskSet ts = load_taskset(a.set);
  const StaticAnalysis an = analyze(ts);
  OracleLimits lim;
  lim.max_hyper_periods = a.horizon;
  lim.max_tasks = a.max_tasks;
  lim.max_hyper_period = a.max_hyper_period;
  const SlotDistribution dist = exact_slot_distribution(ts, an, *policy, *selection, lim);

  fs::create_directories(a.out);
  const std::string stem = (ts.name().empty() ? std::string("set") : ts.name()) + "__" +
                           to_string(*policy) + "__" + to_string(*selection) + "__oracle";
  write_text_file(fs::path(a.out) / (stem + ".csv"), distribution_csv(dist, ts));
  const EntropyReport rep = build_report(dist, ts);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["set"] = ts.name();
  j["policy"] = to_string(*policy);
  j["selection"] = to_string(*selection);
  j["exact"] = true;
  j["metrics"] = report_to_json(rep, ts);
  write_json_file(fs::path(a.out) / (stem + ".json"), j);

  slot_t worst = 0;
  for (slot_t t = 0; t < dist.period; ++t)
    if (slot_min_entropy(dist, t) < slot_min_entropy(dist, worst)) worst = t;
  std::cout << "schedule min-entropy " << round9(rep.schedule_min_entropy) << " (worst slot "
            << worst << "), theorem-4 bound " << round9(rep.theorem4_bound) << "; outputs in "
            << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"schedrand: fixed-priority schedule randomization workbench"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cgen = app.add_subcommand("gen", "generate a task-set corpus");
  cgen->add_option("--groups", gen.groups, "utilization group indices (0..9)");
  cgen->add_option("--tasks-per-group", gen.tasks_per_group, "subgroup task counts");
  cgen->add_option("--sets-per-subgroup", gen.sets_per_subgroup, "sets per (group, count)");
  cgen->add_option("--seed", gen.seed, "master seed");
  cgen->add_option("--out", gen.out, "output directory")->required();

  RunArgs run;
  auto* crun = app.add_subcommand("run", "simulate a corpus under policy sweeps");
  crun->add_option("--corpus", run.corpus, "corpus directory or manifest")->required();
  crun->add_option("--policy", run.policies, "policies to sweep");
  crun->add_option("--selection", run.selections, "selection rules to sweep");
  crun->add_option("--hyper-periods", run.hyper_periods, "hyper-periods per run");
  crun->add_option("--exec-time", run.exec_time, "wcet | uniform:<low>");
  crun->add_option("--seed", run.seed, "master seed");
  crun->add_option("--workers", run.workers, "worker threads (0 = hardware)");
  crun->add_flag("--strict-deadlines", run.strict, "abort on any deadline miss");
  crun->add_flag("--dump-traces", run.dump_traces, "write per-run trace CSVs");
  crun->add_option("--out", run.out, "output directory")->required();

  AnalyzeArgs ana;
  auto* cana = app.add_subcommand("analyze", "aggregate run reports into group tables");
  cana->add_option("--runs", ana.runs, "run output directory or manifest")->required();
  cana->add_option("--out", ana.out, "output directory")->required();

  OracleArgs ora;
  auto* cora = app.add_subcommand("oracle", "exact slot distribution for a tiny set");
  cora->add_option("--set", ora.set, "task-set JSON file")->required();
  cora->add_option("--policy", ora.policy, "policy");
  cora->add_option("--selection", ora.selection, "selection rule");
  cora->add_option("--horizon", ora.horizon, "max hyper-periods to converge");
  cora->add_option("--max-tasks", ora.max_tasks, "state-space cap: tasks");
  cora->add_option("--max-hyper-period", ora.max_hyper_period, "state-space cap: slots");
  cora->add_option("--out", ora.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cgen->parsed()) return cmd_gen(gen);
    if (crun->parsed()) return cmd_run(run);
    if (cana->parsed()) return cmd_analyze(ana);
    if (cora->parsed()) return cmd_oracle(ora);
  } catch (const DeadlineMissError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const OracleCapError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const GenerationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
