#include "stochplan/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "stochplan/cumcp.hpp"
#include "stochplan/lp.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace stochplan {

double gap(double ub, double lb) {
  if (lb > ub + 1e-9) throw std::invalid_argument("gap: lower bound exceeds upper bound");
  if (ub == 0.0 && lb == 0.0) return 0.0;
  if (ub == 0.0) return kInfinity;
  return (ub - lb) / ub;
}

Method parse_method(const std::string& name) {
  if (name == "deq") return Method::DeterministicEquivalent;
  if (name == "lbbd") return Method::Lbbd;
  if (name == "bcheck") return Method::BranchAndCheck;
  if (name == "ilshaped") return Method::IntegerLShaped;
  if (name == "ilshaped-cp") return Method::IntegerLShapedCp;
  if (name == "ilshaped-int") return Method::IntegerLShapedInt;
  throw std::invalid_argument("unknown method '" + name + "'");
}

CutKind parse_cut_kind(const std::string& name) {
  if (name == "nogood") return CutKind::Nogood;
  if (name == "strengthened") return CutKind::StrengthenedNogood;
  if (name == "analytic") return CutKind::AnalyticLinearized;
  if (name == "analytic-weak") return CutKind::AnalyticWeak;
  throw std::invalid_argument("unknown cut kind '" + name + "'");
}

std::string method_label(const MethodSpec& spec) {
  switch (spec.method) {
    case Method::DeterministicEquivalent: return "deq";
    case Method::IntegerLShaped: return "ilshaped";
    case Method::IntegerLShapedCp: return "ilshaped-cp";
    case Method::IntegerLShapedInt: return "ilshaped-int";
    default: break;
  }
  std::string base = spec.method == Method::Lbbd ? "lbbd" : "bcheck";
  switch (spec.cuts) {
    case CutKind::Nogood: return base + "-nogood";
    case CutKind::StrengthenedNogood: return base + "-strengthened";
    case CutKind::AnalyticLinearized: return base + "-analytic";
    case CutKind::AnalyticWeak: return base + "-analytic-weak";
    default: return base;
  }
}

SolveResult run_method(const Instance& instance, const MethodSpec& spec,
                       const MasterConfig& base_config) {
  MasterConfig config = base_config;
  config.cut_kind = spec.cuts;
  switch (spec.method) {
    case Method::DeterministicEquivalent:
      return solve_deterministic_equivalent(instance, config);
    case Method::Lbbd:
      return solve_lbbd(instance, config);
    case Method::BranchAndCheck:
      return solve_branch_and_check(instance, config);
    case Method::IntegerLShaped:
      return solve_integer_lshaped(instance, config, SubproblemEngine::MilpTimeIndexed, true);
    case Method::IntegerLShapedCp:
      return solve_integer_lshaped(instance, config, SubproblemEngine::CpExact, true);
    case Method::IntegerLShapedInt:
      return solve_integer_lshaped(instance, config, SubproblemEngine::CpExact, false);
  }
  throw std::invalid_argument("unknown method");
}

std::uint64_t grid_seed(const ExperimentGrid& grid, int tasks, int facilities, int scenarios,
                        int k) {
  return grid.base_seed + 1000003ull * static_cast<std::uint64_t>(tasks) +
         10007ull * static_cast<std::uint64_t>(facilities) +
         101ull * static_cast<std::uint64_t>(scenarios) + static_cast<std::uint64_t>(k);
}

namespace {

struct GridRun {
  int tasks, facilities, scenarios, k;
  std::uint64_t seed;
  std::vector<SolveResult> results;  // one per method
};

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

void write_row(std::ostream& out, const ExperimentGrid& grid, const GridRun& run,
               std::size_t method_index, const SolveResult& res) {
  const RunStats& st = res.stats;
  out << run.tasks << ',' << run.facilities << ',' << run.scenarios << ',' << run.k << ','
      << run.seed << ',' << method_label(grid.methods[method_index]) << ','
      << to_string(res.status) << ',' << format_double(res.objective) << ','
      << format_double(st.upper_bound) << ',' << format_double(st.lower_bound) << ','
      << format_double(gap(st.upper_bound, std::min(st.lower_bound, st.upper_bound))) << ','
      << st.cuts << ',' << st.calls << ',' << st.nodes << ',';
  if (grid.include_times)
    out << format_double(st.total_seconds) << ',' << format_double(st.cp_subproblem_seconds)
        << ',' << format_double(st.lp_subproblem_seconds);
  else
    out << "-,-,-";
  out << ',' << (st.hit_time_limit ? "tl" : "") << '\n';
}

}  // namespace

void run_grid(const ExperimentGrid& grid, std::ostream& out) {
  if (grid.methods.empty()) throw std::invalid_argument("grid: no methods selected");

  std::vector<GridRun> runs;
  for (int n : grid.task_counts)
    for (int m : grid.facility_counts)
      for (int S : grid.scenario_counts)
        for (int k = 0; k < grid.instances_per_cell; ++k)
          runs.push_back(GridRun{n, m, S, k, grid_seed(grid, n, m, S, k), {}});

  // one unit of work = all methods on one instance, so a run is never
  // split across workers
  auto execute = [&](GridRun& run) {
    const Instance instance =
        generate(run.facilities, run.tasks, run.scenarios, run.seed);
    MasterConfig config;
    config.time_limit_seconds = grid.time_limit_seconds;
    auto bounds = std::make_shared<std::vector<double>>();
    for (int w = 0; w < instance.num_scenarios(); ++w)
      bounds->push_back(scenario_lp_bound(instance, w));
    config.initial_bounds_cache = bounds;
    for (const MethodSpec& spec : grid.methods)
      run.results.push_back(run_method(instance, spec, config));
  };

  const int workers = std::max(1, grid.workers);
  if (workers == 1) {
    for (GridRun& run : runs) execute(run);
  } else {
    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&] {
      while (true) {
        std::size_t mine;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= runs.size()) return;
          mine = next++;
        }
        execute(runs[mine]);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  out << "tasks,facilities,scenarios,instance,seed,method,status,objective,ub,lb,gap,"
         "cuts,calls,nodes,total_s,cpsub_s,lpsub_s,flag\n";
  std::size_t row = 0;
  for (int n : grid.task_counts)
    for (int m : grid.facility_counts)
      for (int S : grid.scenario_counts) {
        const std::size_t cell_start = row;
        for (int k = 0; k < grid.instances_per_cell; ++k, ++row)
          for (std::size_t mi = 0; mi < grid.methods.size(); ++mi)
            write_row(out, grid, runs[row], mi, runs[row].results[mi]);
        // per-cell averages; time-limited runs are flagged and left out of
        // the averages rather than silently mixed in
        for (std::size_t mi = 0; mi < grid.methods.size(); ++mi) {
          RunStats sum;
          double objective = 0.0;
          int completed = 0;
          for (int k = 0; k < grid.instances_per_cell; ++k) {
            const SolveResult& res = runs[cell_start + k].results[mi];
            if (res.stats.hit_time_limit) continue;
            ++completed;
            objective += res.objective;
            sum.total_seconds += res.stats.total_seconds;
            sum.cp_subproblem_seconds += res.stats.cp_subproblem_seconds;
            sum.lp_subproblem_seconds += res.stats.lp_subproblem_seconds;
            sum.cuts += res.stats.cuts;
            sum.calls += res.stats.calls;
            sum.nodes += res.stats.nodes;
          }
          const int excluded = grid.instances_per_cell - completed;
          out << n << ',' << m << ',' << S << ",avg," << ','
              << method_label(grid.methods[mi]) << ',' << (completed ? "" : "*") << ',';
          if (completed) {
            out << format_double(objective / completed) << ",,,,"
                << format_double(static_cast<double>(sum.cuts) / completed) << ','
                << format_double(static_cast<double>(sum.calls) / completed) << ','
                << format_double(static_cast<double>(sum.nodes) / completed) << ',';
            if (grid.include_times)
              out << format_double(sum.total_seconds / completed) << ','
                  << format_double(sum.cp_subproblem_seconds / completed) << ','
                  << format_double(sum.lp_subproblem_seconds / completed);
            else
              out << "-,-,-";
          } else {
            out << ",,,,,,,,,";
          }
          out << ',' << (excluded ? "excl=" + std::to_string(excluded) : "") << '\n';
        }
      }
}

void run_grid(const ExperimentGrid& grid, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("bench: cannot open for writing: " + csv_path);
  run_grid(grid, out);
}

// ---------------------------------------------------------------------------
// command line
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

void write_witness(const std::string& path, const Instance& instance,
                   const SolveResult& result) {
  json doc;
  doc["objective"] = result.objective;
  doc["assignment"] = result.assignment.facility_of;
  doc["schedules"] = json::array();
  for (int i = 0; i < instance.num_facilities; ++i) {
    const std::vector<int> tasks = result.assignment.jobs_on(i);
    for (int w = 0; w < instance.num_scenarios(); ++w) {
      if (static_cast<int>(result.witness_starts.size()) <= i) continue;
      const std::vector<int>& starts = result.witness_starts[i][w];
      if (starts.empty() && !tasks.empty()) continue;
      json sched;
      sched["facility"] = i;
      sched["scenario"] = w;
      sched["tasks"] = tasks;
      sched["starts"] = starts;
      doc["schedules"].push_back(std::move(sched));
    }
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << '\n';
}

int validate_witness(const Instance& instance, const std::string& path,
                     ObjectiveMode objective) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json doc = json::parse(in);
  const std::vector<int> facility_of = doc.at("assignment").get<std::vector<int>>();
  if (static_cast<int>(facility_of.size()) != instance.num_tasks) {
    std::cerr << "witness: assignment length mismatch\n";
    return 1;
  }
  for (int f : facility_of)
    if (f < 0 || f >= instance.num_facilities) {
      std::cerr << "witness: facility index out of range\n";
      return 1;
    }
  const CumObjective mode = objective == ObjectiveMode::Tardiness ? CumObjective::Tardiness
                             : objective == ObjectiveMode::Cost   ? CumObjective::Feasibility
                                                                  : CumObjective::Makespan;
  for (const json& sched : doc.at("schedules")) {
    const int i = sched.at("facility").get<int>();
    const int w = sched.at("scenario").get<int>();
    const std::vector<int> tasks = sched.at("tasks").get<std::vector<int>>();
    const std::vector<int> starts = sched.at("starts").get<std::vector<int>>();
    std::vector<Job> jobs;
    for (int j : tasks) {
      if (facility_of[j] != i) {
        std::cerr << "witness: task " << j << " scheduled on a facility it is not assigned to\n";
        return 1;
      }
      Job job;
      job.id = j;
      job.release = instance.release[j];
      job.deadline = objective == ObjectiveMode::Cost ? instance.deadline[j] : kNoDeadline;
      if (instance.due_date) job.due = (*instance.due_date)[j];
      job.processing = instance.scenarios[w].processing[i][j];
      job.demand = instance.consumption[i][j];
      jobs.push_back(job);
    }
    if (!replay_schedule(jobs, instance.capacity[i], starts, mode)) {
      std::cerr << "witness: schedule for facility " << i << ", scenario " << w
                << " violates the instance constraints\n";
      return 1;
    }
  }
  std::cout << "witness ok\n";
  return 0;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stoi(item));
  if (values.empty()) throw std::invalid_argument("empty list");
  return values;
}

ObjectiveMode parse_objective(const std::string& name) {
  if (name == "makespan") return ObjectiveMode::Makespan;
  if (name == "cost") return ObjectiveMode::Cost;
  if (name == "tardiness") return ObjectiveMode::Tardiness;
  throw std::invalid_argument("unknown objective '" + name + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"exact solvers for two-stage stochastic planning and scheduling"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a random instance to a JSON file");
  int g_tasks = 10, g_facilities = 2, g_scenarios = 1;
  std::uint64_t g_seed = 1;
  std::string g_out;
  bool g_eps_per_task = false;
  gen->add_option("--tasks", g_tasks)->check(CLI::PositiveNumber);
  gen->add_option("--facilities", g_facilities)->check(CLI::PositiveNumber);
  gen->add_option("--scenarios", g_scenarios)->check(CLI::PositiveNumber);
  gen->add_option("--seed", g_seed);
  gen->add_option("--out", g_out)->required();
  gen->add_flag("--eps-per-task", g_eps_per_task,
                "draw one perturbation per (scenario, facility, task) entry");

  // solve
  auto* solve = app.add_subcommand("solve", "solve one instance with one method");
  std::string s_in, s_method = "bcheck", s_cuts = "nogood", s_objective = "makespan";
  std::string s_dispersion = "none", s_out;
  int s_tasks = 0, s_facilities = 2, s_scenarios = 1;
  std::uint64_t s_seed = 1;
  double s_time_limit = 60.0, s_lambda = 0.0;
  solve->add_option("--in", s_in, "instance file; omit to generate from --tasks/--seed");
  solve->add_option("--method", s_method)
      ->check(CLI::IsMember({"deq", "lbbd", "bcheck", "ilshaped", "ilshaped-cp", "ilshaped-int"}));
  solve->add_option("--cuts", s_cuts)
      ->check(CLI::IsMember({"nogood", "strengthened", "analytic", "analytic-weak"}));
  solve->add_option("--objective", s_objective)
      ->check(CLI::IsMember({"makespan", "cost", "tardiness"}));
  solve->add_option("--tasks", s_tasks);
  solve->add_option("--facilities", s_facilities);
  solve->add_option("--scenarios", s_scenarios);
  solve->add_option("--seed", s_seed);
  solve->add_option("--time-limit", s_time_limit, "seconds");
  solve->add_option("--risk-lambda", s_lambda)->check(CLI::Range(0.0, 1.0));
  solve->add_option("--dispersion", s_dispersion)->check(CLI::IsMember({"none", "max"}));
  solve->add_option("--out", s_out, "write the solution witness as JSON");

  // bench
  auto* bench = app.add_subcommand("bench", "run an experiment grid and emit CSV");
  std::string b_tasks = "10", b_facilities = "2", b_scenarios = "1,5";
  std::string b_methods = "bcheck-analytic,bcheck-nogood,lbbd-nogood";
  std::string b_out;
  int b_instances = 3, b_workers = 1;
  std::uint64_t b_seed = 1;
  double b_time_limit = 60.0;
  bool b_omit_times = false;
  bench->add_option("--tasks", b_tasks, "comma separated");
  bench->add_option("--facilities", b_facilities, "comma separated");
  bench->add_option("--scenarios", b_scenarios, "comma separated");
  bench->add_option("--methods", b_methods,
                    "comma separated; lbbd/bcheck accept a -<cuts> suffix");
  bench->add_option("--instances", b_instances)->check(CLI::PositiveNumber);
  bench->add_option("--seed", b_seed);
  bench->add_option("--time-limit", b_time_limit);
  bench->add_option("--workers", b_workers)->check(CLI::PositiveNumber);
  bench->add_option("--out", b_out)->required();
  bench->add_flag("--omit-times", b_omit_times,
                  "suppress wall-clock columns so identical seeds give identical bytes");

  // validate
  auto* validate = app.add_subcommand("validate", "check an instance file and optional witness");
  std::string v_in, v_witness, v_objective = "makespan";
  validate->add_option("--in", v_in)->required();
  validate->add_option("--witness", v_witness);
  validate->add_option("--objective", v_objective)
      ->check(CLI::IsMember({"makespan", "cost", "tardiness"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit cleanly, usage errors are 2
  }

  try {
    if (gen->parsed()) {
      const Instance instance =
          generate(g_facilities, g_tasks, g_scenarios, g_seed,
                   g_eps_per_task ? PerturbationMode::PerScenarioEntry
                                  : PerturbationMode::PerScenarioGroup);
      to_file(instance, g_out);
      std::cout << "wrote " << g_out << " (" << g_tasks << " tasks, " << g_facilities
                << " facilities, " << g_scenarios << " scenarios)\n";
      return 0;
    }

    if (solve->parsed()) {
      Instance instance = s_in.empty()
                              ? generate(s_facilities, s_tasks > 0 ? s_tasks : 10, s_scenarios,
                                         s_seed)
                              : from_file(s_in);
      MasterConfig config;
      config.objective = parse_objective(s_objective);
      config.time_limit_seconds = s_time_limit;
      config.risk_lambda = s_lambda;
      config.dispersion =
          s_dispersion == "max" ? DispersionMode::MaxOverScenarios : DispersionMode::None;
      MethodSpec spec{parse_method(s_method), parse_cut_kind(s_cuts)};
      const SolveResult result = run_method(instance, spec, config);
      std::cout << "status:    " << to_string(result.status) << '\n';
      if (result.status == SolveStatus::Optimal || result.status == SolveStatus::TimeLimit) {
        std::cout << "objective: " << result.objective << '\n' << "assignment:";
        for (int f : result.assignment.facility_of) std::cout << ' ' << f;
        std::cout << '\n';
      }
      std::cout << "bounds:    [" << result.stats.lower_bound << ", "
                << result.stats.upper_bound << "]\n"
                << "cuts:      " << result.stats.cuts << "\ncalls:     " << result.stats.calls
                << "\nnodes:     " << result.stats.nodes << "\ntime:      "
                << result.stats.total_seconds << " s (cp " << result.stats.cp_subproblem_seconds
                << " s, lp " << result.stats.lp_subproblem_seconds << " s)\n";
      if (!s_out.empty() && !result.assignment.facility_of.empty())
        write_witness(s_out, instance, result);
      return result.status == SolveStatus::TimeLimit ? 3 : 0;
    }

    if (bench->parsed()) {
      ExperimentGrid grid;
      grid.task_counts = parse_int_list(b_tasks);
      grid.facility_counts = parse_int_list(b_facilities);
      grid.scenario_counts = parse_int_list(b_scenarios);
      grid.instances_per_cell = b_instances;
      grid.base_seed = b_seed;
      grid.time_limit_seconds = b_time_limit;
      grid.workers = b_workers;
      grid.include_times = !b_omit_times;
      std::stringstream methods(b_methods);
      std::string item;
      while (std::getline(methods, item, ',')) {
        MethodSpec spec;
        const auto dash = item.find('-');
        const std::string head = item.substr(0, dash);
        if (head == "lbbd" || head == "bcheck") {
          spec.method = parse_method(head);
          spec.cuts = dash == std::string::npos ? CutKind::Nogood
                                                : parse_cut_kind(item.substr(dash + 1));
        } else {
          spec.method = parse_method(item);
        }
        grid.methods.push_back(spec);
      }
      run_grid(grid, b_out);
      std::cout << "wrote " << b_out << '\n';
      return 0;
    }

    if (validate->parsed()) {
      const Instance instance = from_file(v_in);
      std::cout << "instance ok: " << instance.num_tasks << " tasks, "
                << instance.num_facilities << " facilities, " << instance.num_scenarios()
                << " scenarios\n";
      if (!v_witness.empty())
        return validate_witness(instance, v_witness, parse_objective(v_objective));
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace stochplan
