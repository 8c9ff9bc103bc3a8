#include "stochplan/drivers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "stochplan/cumcp.hpp"
#include "stochplan/lp.hpp"

namespace stochplan {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_config(const Instance& instance, const MasterConfig& config) {
  if (config.risk_lambda < 0.0 || config.risk_lambda > 1.0)
    throw std::invalid_argument("config: risk lambda must lie in [0, 1]");
  if (config.dispersion == DispersionMode::None && config.risk_lambda != 0.0)
    throw std::invalid_argument("config: dispersion None requires lambda = 0");
  if (config.objective == ObjectiveMode::Cost && !instance.assign_cost)
    throw std::invalid_argument("config: cost objective needs assign_cost in the instance");
  if (config.objective == ObjectiveMode::Tardiness && !instance.due_date)
    throw std::invalid_argument("config: tardiness objective needs due_date in the instance");
}

std::vector<Job> facility_jobs(const Instance& instance, int facility, int scenario,
                               const std::vector<int>& tasks, ObjectiveMode mode) {
  std::vector<Job> jobs;
  jobs.reserve(tasks.size());
  for (int j : tasks) {
    Job job;
    job.id = j;
    job.processing = instance.scenarios[scenario].processing[facility][j];
    job.demand = instance.consumption[facility][j];
    switch (mode) {
      case ObjectiveMode::Makespan:
        job.release = instance.release[j];
        break;
      case ObjectiveMode::Tardiness:
        job.release = instance.release[j];
        job.due = (*instance.due_date)[j];
        break;
      case ObjectiveMode::Cost:
        job.release = instance.release[j];
        job.deadline = instance.deadline[j];
        break;
    }
    jobs.push_back(job);
  }
  return jobs;
}

int max_processing(const Instance& instance, int task) {
  int p = 1;
  for (const Scenario& sc : instance.scenarios)
    for (int i = 0; i < instance.num_facilities; ++i)
      p = std::max(p, sc.processing[i][task]);
  return p;
}

}  // namespace

int MasterModel::column_of(const VarRef& ref) const {
  switch (ref.kind) {
    case VarKind::X: return x_col(ref.facility, ref.task);
    case VarKind::BetaScenario: return beta_col(ref.scenario);
    case VarKind::BetaFacility: return beta_fac_col(ref.facility, ref.scenario);
    case VarKind::ZAux: {
      const int col = z_col(ref.facility, ref.scenario);
      if (col < 0) throw std::logic_error("master: cut references a z variable not in the model");
      return col;
    }
    case VarKind::BetaMax:
      if (beta_max_col < 0)
        throw std::logic_error("master: cut references beta_max in a risk-neutral model");
      return beta_max_col;
  }
  throw std::logic_error("master: unknown variable kind");
}

RowCut MasterModel::to_row(const Cut& cut) const {
  std::map<int, double> coeffs;
  for (const auto& [ref, coef] : cut.coeffs) coeffs[column_of(ref)] += coef;
  RowCut row;
  row.sense = 'G';
  row.rhs = cut.rhs;
  row.coeffs.assign(coeffs.begin(), coeffs.end());
  return row;
}

void MasterModel::add_cut(const Cut& cut) {
  const RowCut row = to_row(cut);
  milp.lp.add_row(row.coeffs, row.sense, row.rhs);
}

MasterModel build_master(const Instance& instance, const MasterConfig& config) {
  check_config(instance, config);
  const int m = instance.num_facilities;
  const int n = instance.num_tasks;
  const int S = instance.num_scenarios();
  const bool cost_mode = config.objective == ObjectiveMode::Cost;
  const double lambda = config.dispersion == DispersionMode::MaxOverScenarios
                            ? config.risk_lambda
                            : 0.0;

  MasterModel master;
  master.num_facilities = m;
  master.num_tasks = n;
  master.num_scenarios = S;
  LpModel& lp = master.milp.lp;

  master.x_base = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double cost = cost_mode ? (*instance.assign_cost)[i][j] : 0.0;
      master.milp.integer_vars.push_back(lp.add_var(cost, 0.0, 1.0));
    }
  master.beta_base = lp.num_vars;
  for (int w = 0; w < S; ++w) {
    const double weight = cost_mode ? 0.0 : (1.0 - lambda) * instance.scenarios[w].probability;
    lp.add_var(weight, 0.0, cost_mode ? 0.0 : kInfinity);
  }
  master.beta_fac_base = lp.num_vars;
  for (int i = 0; i < m; ++i)
    for (int w = 0; w < S; ++w) lp.add_var(0.0, 0.0, cost_mode ? 0.0 : kInfinity);

  if (config.cut_kind == CutKind::AnalyticLinearized &&
      config.objective == ObjectiveMode::Makespan) {
    int r_plus = instance.release[0];
    int r_minus = instance.release[0];
    for (int r : instance.release) {
      r_plus = std::max(r_plus, r);
      r_minus = std::min(r_minus, r);
    }
    master.z_base = lp.num_vars;
    for (int i = 0; i < m; ++i)
      for (int w = 0; w < S; ++w)
        lp.add_var(0.0, 0.0, static_cast<double>(r_plus - r_minus));
  }
  if (config.dispersion == DispersionMode::MaxOverScenarios) {
    master.beta_max_col = lp.add_var(lambda, 0.0, kInfinity);
    for (int w = 0; w < S; ++w)
      lp.add_row({{master.beta_max_col, 1.0}, {master.beta_col(w), -1.0}}, 'G', 0.0);
  }

  for (int j = 0; j < n; ++j) {
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < m; ++i) row.emplace_back(master.x_col(i, j), 1.0);
    lp.add_row(std::move(row), 'E', 1.0);
  }

  if (!cost_mode) {
    if (config.objective == ObjectiveMode::Tardiness) {
      // scenario tardiness sums over facilities
      for (int w = 0; w < S; ++w) {
        std::vector<std::pair<int, double>> row{{master.beta_col(w), 1.0}};
        for (int i = 0; i < m; ++i) row.emplace_back(master.beta_fac_col(i, w), -1.0);
        lp.add_row(std::move(row), 'G', 0.0);
      }
    } else {
      for (int i = 0; i < m; ++i)
        for (int w = 0; w < S; ++w)
          lp.add_row({{master.beta_col(w), 1.0}, {master.beta_fac_col(i, w), -1.0}}, 'G', 0.0);
    }
  }

  if (config.include_relaxation) {
    std::vector<Cut> relaxation;
    switch (config.objective) {
      case ObjectiveMode::Makespan: relaxation = makespan_relaxation(instance); break;
      case ObjectiveMode::Cost: relaxation = cost_relaxation(instance); break;
      case ObjectiveMode::Tardiness: relaxation = tardiness_relaxations(instance); break;
    }
    for (const Cut& cut : relaxation) master.add_cut(cut);
  }

  if (config.include_initial_bounds && config.objective == ObjectiveMode::Makespan) {
    if (config.initial_bounds_cache) {
      for (int w = 0; w < S; ++w)
        lp.add_row({{master.beta_col(w), 1.0}}, 'G', (*config.initial_bounds_cache)[w]);
    } else {
      for (const Cut& cut : initial_scenario_bounds(instance)) master.add_cut(cut);
    }
  }
  return master;
}

Evaluation evaluate_assignment(const Instance& instance, const Assignment& assignment,
                               const MasterConfig& config) {
  check_config(instance, config);
  if (static_cast<int>(assignment.facility_of.size()) != instance.num_tasks)
    throw std::invalid_argument("evaluate: assignment length != tasks");
  const int m = instance.num_facilities;
  const int S = instance.num_scenarios();
  const auto t0 = Clock::now();

  Evaluation eval;
  eval.facility_values.assign(m, std::vector<double>(S, 0.0));
  eval.scenario_values.assign(S, 0.0);
  eval.starts.assign(m, std::vector<std::vector<int>>(S));

  for (int i = 0; i < m; ++i) {
    const std::vector<int> tasks = assignment.jobs_on(i);
    for (int w = 0; w < S; ++w) {
      if (tasks.empty()) continue;
      const std::vector<Job> jobs = facility_jobs(instance, i, w, tasks, config.objective);
      CumOptions options;
      options.time_limit_seconds = config.time_limit_seconds - seconds_since(t0);
      CumResult res;
      switch (config.objective) {
        case ObjectiveMode::Makespan: res = solve_min_makespan(jobs, instance.capacity[i], options); break;
        case ObjectiveMode::Tardiness: res = solve_min_tardiness(jobs, instance.capacity[i], options); break;
        case ObjectiveMode::Cost: res = check_feasibility(jobs, instance.capacity[i], options); break;
      }
      if (res.status == SolveStatus::TimeLimit) {
        eval.timed_out = true;
        eval.cp_seconds = seconds_since(t0);
        return eval;
      }
      if (config.objective == ObjectiveMode::Cost) {
        if (res.status == SolveStatus::Infeasible) {
          eval.feasible = false;
          eval.facility_values[i][w] = kInfinity;
        } else {
          eval.starts[i][w] = res.schedule.starts;
        }
      } else {
        eval.facility_values[i][w] = static_cast<double>(res.value);
        eval.starts[i][w] = res.schedule.starts;
      }
    }
  }

  for (int w = 0; w < S; ++w) {
    double value = 0.0;
    for (int i = 0; i < m; ++i) {
      if (config.objective == ObjectiveMode::Tardiness)
        value += eval.facility_values[i][w];
      else if (config.objective == ObjectiveMode::Makespan)
        value = std::max(value, eval.facility_values[i][w]);
    }
    eval.scenario_values[w] = value;
  }

  double first_stage = 0.0;
  if (config.objective == ObjectiveMode::Cost)
    for (int j = 0; j < instance.num_tasks; ++j)
      first_stage += (*instance.assign_cost)[assignment.facility_of[j]][j];
  const double lambda =
      config.dispersion == DispersionMode::MaxOverScenarios ? config.risk_lambda : 0.0;
  double expected = 0.0;
  double worst = 0.0;
  for (int w = 0; w < S; ++w) {
    expected += instance.scenarios[w].probability * eval.scenario_values[w];
    worst = std::max(worst, eval.scenario_values[w]);
  }
  eval.objective = first_stage + (1.0 - lambda) * expected + lambda * worst;
  eval.cp_seconds = seconds_since(t0);
  return eval;
}

// ---------------------------------------------------------------------------
// time-indexed models
// ---------------------------------------------------------------------------

TimeIndexedModel build_deterministic_equivalent(const Instance& instance, int horizon_cap,
                                                bool include_capacity_rows) {
  instance.validate();
  const int m = instance.num_facilities;
  const int n = instance.num_tasks;
  const int S = instance.num_scenarios();

  int horizon = 0;
  for (int j = 0; j < n; ++j) horizon = std::max(horizon, instance.release[j]);
  for (int j = 0; j < n; ++j) horizon += max_processing(instance, j);
  if (horizon > horizon_cap)
    throw std::invalid_argument(
        "deterministic equivalent: horizon " + std::to_string(horizon) + " exceeds the cap " +
        std::to_string(horizon_cap) +
        "; shrink the instance or raise the cap (the model has one start variable per "
        "facility, task, scenario and time step)");

  TimeIndexedModel deq;
  deq.horizon = horizon;
  deq.capacity_rows_included = include_capacity_rows;
  LpModel& lp = deq.milp.lp;

  deq.x_col.assign(m, std::vector<int>(n));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      deq.x_col[i][j] = lp.add_var(0.0, 0.0, 1.0);
      deq.milp.integer_vars.push_back(deq.x_col[i][j]);
    }
  deq.beta_col.resize(S);
  for (int w = 0; w < S; ++w)
    deq.beta_col[w] = lp.add_var(instance.scenarios[w].probability, 0.0, kInfinity);
  deq.beta_fac_col.assign(m, std::vector<int>(S));
  for (int i = 0; i < m; ++i)
    for (int w = 0; w < S; ++w) deq.beta_fac_col[i][w] = lp.add_var(0.0, 0.0, kInfinity);

  // start variables; window zeroing done by simply not creating columns
  // z_first[i][j][w] is the column of start time r_j
  deq.z_begin = lp.num_vars;
  std::vector<std::vector<std::vector<int>>> z_first(
      m, std::vector<std::vector<int>>(n, std::vector<int>(S, -1)));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      for (int w = 0; w < S; ++w) {
        const int p = instance.scenarios[w].processing[i][j];
        z_first[i][j][w] = lp.num_vars;
        for (int t = instance.release[j]; t + p <= horizon; ++t) {
          const int col = lp.add_var(0.0, 0.0, 1.0);
          deq.milp.integer_vars.push_back(col);
          deq.z_fac.push_back(i);
          deq.z_task.push_back(j);
          deq.z_scen.push_back(w);
          deq.z_time.push_back(t);
        }
      }

  for (int j = 0; j < n; ++j) {
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < m; ++i) row.emplace_back(deq.x_col[i][j], 1.0);
    lp.add_row(std::move(row), 'E', 1.0);
  }
  for (int i = 0; i < m; ++i)
    for (int w = 0; w < S; ++w)
      lp.add_row({{deq.beta_col[w], 1.0}, {deq.beta_fac_col[i][w], -1.0}}, 'G', 0.0);

  // scenario makespan: beta_w at least the completion of every task
  for (int j = 0; j < n; ++j)
    for (int w = 0; w < S; ++w) {
      std::vector<std::pair<int, double>> row{{deq.beta_col[w], 1.0}};
      for (int i = 0; i < m; ++i) {
        const int p = instance.scenarios[w].processing[i][j];
        int col = z_first[i][j][w];
        for (int t = instance.release[j]; t + p <= horizon; ++t, ++col)
          row.emplace_back(col, -static_cast<double>(t + p));
      }
      lp.add_row(std::move(row), 'G', 0.0);
    }

  // a task starts exactly once on its assigned facility
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      for (int w = 0; w < S; ++w) {
        std::vector<std::pair<int, double>> row;
        const int p = instance.scenarios[w].processing[i][j];
        int col = z_first[i][j][w];
        for (int t = instance.release[j]; t + p <= horizon; ++t, ++col) row.emplace_back(col, 1.0);
        row.emplace_back(deq.x_col[i][j], -1.0);
        lp.add_row(std::move(row), 'E', 0.0);
      }

  if (include_capacity_rows) {
    // capacity at each time step: tasks active at t are those started in
    // (t - p, t]
    for (int i = 0; i < m; ++i)
      for (int w = 0; w < S; ++w) {
        std::vector<std::vector<std::pair<int, double>>> buckets(horizon);
        for (int j = 0; j < n; ++j) {
          const int p = instance.scenarios[w].processing[i][j];
          const double c = instance.consumption[i][j];
          int col = z_first[i][j][w];
          for (int t = instance.release[j]; t + p <= horizon; ++t, ++col)
            for (int tau = t; tau < t + p; ++tau) buckets[tau].emplace_back(col, c);
        }
        for (int tau = 0; tau < horizon; ++tau)
          if (!buckets[tau].empty())
            lp.add_row(std::move(buckets[tau]), 'L', instance.capacity[i]);
      }
  }

  // energy bound on the facility epigraphs
  for (int i = 0; i < m; ++i)
    for (int w = 0; w < S; ++w) {
      std::vector<std::pair<int, double>> row{{deq.beta_fac_col[i][w], 1.0}};
      for (int j = 0; j < n; ++j) {
        const double energy = static_cast<double>(instance.consumption[i][j]) *
                              instance.scenarios[w].processing[i][j] / instance.capacity[i];
        row.emplace_back(deq.x_col[i][j], -energy);
      }
      lp.add_row(std::move(row), 'G', 0.0);
    }

  // release-anchored energy: if the anchor task sits on the facility, the
  // tasks released no earlier than it all run after its release
  for (int i = 0; i < m; ++i)
    for (int w = 0; w < S; ++w)
      for (int anchor = 0; anchor < n; ++anchor) {
        if (instance.release[anchor] == 0) continue;  // plain energy row covers it
        std::vector<std::pair<int, double>> row{{deq.beta_fac_col[i][w], 1.0}};
        double anchor_coef = -static_cast<double>(instance.release[anchor]);
        for (int j = 0; j < n; ++j) {
          if (instance.release[j] < instance.release[anchor]) continue;
          const double energy = static_cast<double>(instance.consumption[i][j]) *
                                instance.scenarios[w].processing[i][j] / instance.capacity[i];
          if (j == anchor)
            anchor_coef -= energy;
          else
            row.emplace_back(deq.x_col[i][j], -energy);
        }
        row.emplace_back(deq.x_col[i][anchor], anchor_coef);
        lp.add_row(std::move(row), 'G', 0.0);
      }
  return deq;
}

RowGenerator capacity_row_generator(const Instance& instance, const TimeIndexedModel& model) {
  return [&instance, &model](const std::vector<double>& x) {
    const int m = instance.num_facilities;
    const int S = instance.num_scenarios();
    const int H = model.horizon;
    std::vector<double> usage(static_cast<std::size_t>(m) * S * H, 0.0);
    auto at = [&](int i, int w, int tau) -> double& {
      return usage[(static_cast<std::size_t>(i) * S + w) * H + tau];
    };
    for (std::size_t k = 0; k < model.z_fac.size(); ++k) {
      const double v = x[model.z_begin + static_cast<int>(k)];
      if (v <= 1e-9) continue;
      const int i = model.z_fac[k];
      const int w = model.z_scen[k];
      const int j = model.z_task[k];
      const int p = instance.scenarios[w].processing[i][j];
      const double c = instance.consumption[i][j];
      for (int tau = model.z_time[k]; tau < model.z_time[k] + p; ++tau) at(i, w, tau) += c * v;
    }
    std::vector<RowCut> rows;
    for (int i = 0; i < m; ++i)
      for (int w = 0; w < S; ++w)
        for (int tau = 0; tau < H; ++tau) {
          if (at(i, w, tau) <= instance.capacity[i] + 1e-6) continue;
          RowCut row;
          row.sense = 'L';
          row.rhs = instance.capacity[i];
          for (std::size_t k = 0; k < model.z_fac.size(); ++k) {
            if (model.z_fac[k] != i || model.z_scen[k] != w) continue;
            const int j = model.z_task[k];
            const int p = instance.scenarios[w].processing[i][j];
            if (model.z_time[k] <= tau && tau < model.z_time[k] + p)
              row.coeffs.emplace_back(model.z_begin + static_cast<int>(k),
                                      static_cast<double>(instance.consumption[i][j]));
          }
          rows.push_back(std::move(row));
        }
    return rows;
  };
}

namespace {

// LP with generated rows: solve, separate, append, warm-restart until the
// generator is silent.
LpSolution solve_lp_generated(LpModel& model, const RowGenerator& generator) {
  LpSolver solver;
  LpBasis basis;
  bool warm = false;
  while (true) {
    const LpSolution sol = solver.solve(model, warm ? &basis : nullptr, &basis);
    if (sol.status != LpStatus::Optimal || !generator) return sol;
    const std::vector<RowCut> rows = generator(sol.x);
    if (rows.empty()) return sol;
    for (const RowCut& row : rows) model.add_row(row.coeffs, row.sense, row.rhs);
    while (basis.status.size() <
           static_cast<std::size_t>(model.num_vars) + model.rows.size())
      basis.status.push_back(VarStatus::Basic);
    warm = true;
  }
}

}  // namespace

double scenario_lp_bound(const Instance& instance, int scenario) {
  Instance single = instance;
  single.scenarios = {instance.scenarios[scenario]};
  single.scenarios[0].probability = 1.0;
  TimeIndexedModel deq =
      build_deterministic_equivalent(single, 10000, /*include_capacity_rows=*/false);
  const RowGenerator generator = capacity_row_generator(single, deq);
  const LpSolution sol = solve_lp_generated(deq.milp.lp, generator);
  if (sol.status != LpStatus::Optimal) return 0.0;
  return std::max(0.0, sol.objective);
}

namespace {

// Time-indexed MILP of one (facility, scenario) block over an assigned job
// set; exact alternative to the CP solver.  Capacity rows are generated on
// violation.
struct SubproblemMilp {
  MilpModel milp;
  std::vector<int> assign_row;  // row index of "job starts once", per job
  int horizon = 0;
  int z_begin = 0;
  std::vector<int> z_job, z_time;  // per start column: position in `tasks`, start time
};

SubproblemMilp build_subproblem_milp(const Instance& instance, int facility, int scenario,
                                     const std::vector<int>& tasks, bool relax) {
  SubproblemMilp sub;
  LpModel& lp = sub.milp.lp;
  int horizon = 0;
  for (int j : tasks) horizon = std::max(horizon, instance.release[j]);
  for (int j : tasks) horizon += instance.scenarios[scenario].processing[facility][j];
  sub.horizon = horizon;

  const int makespan_col = lp.add_var(1.0, 0.0, kInfinity);
  sub.z_begin = lp.num_vars;
  std::vector<int> z_first(tasks.size());
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const int j = tasks[k];
    const int p = instance.scenarios[scenario].processing[facility][j];
    z_first[k] = lp.num_vars;
    for (int t = instance.release[j]; t + p <= horizon; ++t) {
      const int col = lp.add_var(0.0, 0.0, 1.0);
      if (!relax) sub.milp.integer_vars.push_back(col);
      sub.z_job.push_back(static_cast<int>(k));
      sub.z_time.push_back(t);
    }
  }
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const int j = tasks[k];
    const int p = instance.scenarios[scenario].processing[facility][j];
    std::vector<std::pair<int, double>> row{{makespan_col, 1.0}};
    int col = z_first[k];
    for (int t = instance.release[j]; t + p <= horizon; ++t, ++col)
      row.emplace_back(col, -static_cast<double>(t + p));
    lp.add_row(std::move(row), 'G', 0.0);
  }
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const int j = tasks[k];
    const int p = instance.scenarios[scenario].processing[facility][j];
    std::vector<std::pair<int, double>> row;
    int col = z_first[k];
    for (int t = instance.release[j]; t + p <= horizon; ++t, ++col) row.emplace_back(col, 1.0);
    sub.assign_row.push_back(lp.num_rows());
    lp.add_row(std::move(row), 'E', 1.0);
  }
  return sub;
}

RowGenerator subproblem_capacity_generator(const Instance& instance, int facility,
                                           int scenario, const std::vector<int>& tasks,
                                           const SubproblemMilp& sub) {
  return [&instance, facility, scenario, tasks, &sub](const std::vector<double>& x) {
    const int H = sub.horizon;
    std::vector<double> usage(H, 0.0);
    for (std::size_t k = 0; k < sub.z_job.size(); ++k) {
      const double v = x[sub.z_begin + static_cast<int>(k)];
      if (v <= 1e-9) continue;
      const int j = tasks[sub.z_job[k]];
      const int p = instance.scenarios[scenario].processing[facility][j];
      const double c = instance.consumption[facility][j];
      for (int tau = sub.z_time[k]; tau < sub.z_time[k] + p; ++tau) usage[tau] += c * v;
    }
    std::vector<RowCut> rows;
    for (int tau = 0; tau < H; ++tau) {
      if (usage[tau] <= instance.capacity[facility] + 1e-6) continue;
      RowCut row;
      row.sense = 'L';
      row.rhs = instance.capacity[facility];
      for (std::size_t k = 0; k < sub.z_job.size(); ++k) {
        const int j = tasks[sub.z_job[k]];
        const int p = instance.scenarios[scenario].processing[facility][j];
        if (sub.z_time[k] <= tau && tau < sub.z_time[k] + p)
          row.coeffs.emplace_back(sub.z_begin + static_cast<int>(k),
                                  static_cast<double>(instance.consumption[facility][j]));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
}

std::optional<Cut> classical_cut_for(const Instance& instance, int facility, int scenario,
                                     const std::vector<int>& tasks) {
  if (tasks.empty()) return std::nullopt;
  SubproblemMilp sub = build_subproblem_milp(instance, facility, scenario, tasks, /*relax=*/true);
  const RowGenerator generator =
      subproblem_capacity_generator(instance, facility, scenario, tasks, sub);
  const LpSolution sol = solve_lp_generated(sub.milp.lp, generator);
  if (sol.status != LpStatus::Optimal) return std::nullopt;
  std::vector<std::pair<int, double>> duals;
  for (std::size_t k = 0; k < tasks.size(); ++k)
    duals.emplace_back(tasks[k], sol.duals[sub.assign_row[k]]);
  return classical_lp_cut(facility, scenario, sol.objective, duals);
}

struct CandidateContext {
  const Instance& instance;
  const MasterConfig& config;
  const MasterModel& master;
  RunStats& stats;
  Clock::time_point t0;
  int r_plus = 0;
  int r_minus = 0;
  bool use_integer_cuts = false;
  bool use_lp_cuts = false;
};

double candidate_value(const MasterModel& master, const std::vector<double>& candidate,
                       const VarRef& ref) {
  return candidate[master.column_of(ref)];
}

// Cuts for every (facility, scenario) whose epigraph value lies below the
// exact subproblem value at this candidate.
std::vector<Cut> cuts_for_candidate(CandidateContext& ctx, const Assignment& assignment,
                                    const Evaluation& eval,
                                    const std::vector<double>& candidate) {
  const Instance& instance = ctx.instance;
  const MasterConfig& config = ctx.config;
  std::vector<Cut> cuts;
  const int m = instance.num_facilities;
  const int S = instance.num_scenarios();

  if (config.objective == ObjectiveMode::Cost) {
    for (int i = 0; i < m; ++i) {
      const std::vector<int> tasks = assignment.jobs_on(i);
      for (int w = 0; w < S; ++w) {
        if (!std::isinf(eval.facility_values[i][w])) continue;
        SubproblemValue sp{i, w, kInfinity, tasks};
        if (config.cut_kind == CutKind::StrengthenedNogood) {
          auto resolve = [&](const std::vector<int>& subset) {
            const auto t_cp = Clock::now();
            const CumResult res = check_feasibility(
                facility_jobs(instance, i, w, subset, ObjectiveMode::Cost),
                instance.capacity[i]);
            ctx.stats.cp_subproblem_seconds += seconds_since(t_cp);
            return res.status == SolveStatus::Infeasible ? kInfinity : 0.0;
          };
          sp = strengthen_nogood(sp, resolve, 2 * static_cast<int>(tasks.size()));
          Cut cut = cost_feasibility_cut(sp);
          cut.origin = CutOrigin::StrengthenedNogood;
          cuts.push_back(std::move(cut));
        } else {
          cuts.push_back(cost_feasibility_cut(sp));
        }
      }
    }
    return cuts;
  }

  if (config.objective == ObjectiveMode::Tardiness &&
      (config.cut_kind == CutKind::AnalyticLinearized ||
       config.cut_kind == CutKind::AnalyticWeak)) {
    for (int w = 0; w < S; ++w) {
      double true_value = 0.0;
      std::vector<SubproblemValue> per_facility;
      for (int i = 0; i < m; ++i) {
        per_facility.push_back(
            SubproblemValue{i, w, eval.facility_values[i][w], assignment.jobs_on(i)});
        true_value += eval.facility_values[i][w];
      }
      if (candidate_value(ctx.master, candidate, VarRef::beta(w)) >= true_value - 1e-6)
        continue;
      cuts.push_back(tardiness_cut(instance, w, per_facility));
    }
    return cuts;
  }

  for (int i = 0; i < m; ++i) {
    const std::vector<int> tasks = assignment.jobs_on(i);
    for (int w = 0; w < S; ++w) {
      const double true_value = eval.facility_values[i][w];
      const double beta =
          candidate_value(ctx.master, candidate, VarRef::beta_fac(i, w));
      if (beta >= true_value - 1e-6) {
        if (ctx.use_lp_cuts && !tasks.empty()) {
          // classical cuts may still be violated below the exact value
          const auto t_lp = Clock::now();
          std::optional<Cut> cut = classical_cut_for(instance, i, w, tasks);
          ctx.stats.lp_subproblem_seconds += seconds_since(t_lp);
          if (cut) {
            const double slack = cut_slack(*cut, [&](const VarRef& ref) {
              return candidate_value(ctx.master, candidate, ref);
            });
            if (slack < -1e-6) cuts.push_back(std::move(*cut));
          }
        }
        continue;
      }
      SubproblemValue sp{i, w, true_value, tasks};
      if (ctx.use_integer_cuts) {
        double lb = 0.0;
        if (config.integer_cut_energy_lb)
          lb = static_cast<double>(energy_lower_bound(
              facility_jobs(instance, i, w, tasks, config.objective), instance.capacity[i]));
        cuts.push_back(integer_lshaped_cut(sp, instance.num_tasks, lb));
        if (ctx.use_lp_cuts && !tasks.empty()) {
          const auto t_lp = Clock::now();
          std::optional<Cut> cut = classical_cut_for(instance, i, w, tasks);
          ctx.stats.lp_subproblem_seconds += seconds_since(t_lp);
          if (cut) {
            const double slack = cut_slack(*cut, [&](const VarRef& ref) {
              return candidate_value(ctx.master, candidate, ref);
            });
            if (slack < -1e-6) cuts.push_back(std::move(*cut));
          }
        }
        continue;
      }
      switch (config.cut_kind) {
        case CutKind::Nogood: {
          if (auto cut = nogood_cut(sp)) cuts.push_back(std::move(*cut));
          break;
        }
        case CutKind::StrengthenedNogood: {
          auto resolve = [&](const std::vector<int>& subset) {
            const auto t_cp = Clock::now();
            const std::vector<Job> jobs =
                facility_jobs(instance, i, w, subset, config.objective);
            const CumResult res = config.objective == ObjectiveMode::Makespan
                                      ? solve_min_makespan(jobs, instance.capacity[i])
                                      : solve_min_tardiness(jobs, instance.capacity[i]);
            ctx.stats.cp_subproblem_seconds += seconds_since(t_cp);
            return static_cast<double>(res.value);
          };
          const SubproblemValue reduced =
              strengthen_nogood(sp, resolve, 2 * static_cast<int>(tasks.size()));
          if (auto cut = nogood_cut(reduced)) {
            cut->origin = CutOrigin::StrengthenedNogood;
            cuts.push_back(std::move(*cut));
          }
          break;
        }
        case CutKind::AnalyticLinearized: {
          auto family = analytic_cut_linearized(
              sp, instance.scenarios[w].processing[i], ctx.r_plus, ctx.r_minus);
          for (Cut& cut : family) cuts.push_back(std::move(cut));
          break;
        }
        case CutKind::AnalyticWeak: {
          if (auto cut = analytic_cut_weak(sp, instance.scenarios[w].processing[i],
                                           ctx.r_plus, ctx.r_minus))
            cuts.push_back(std::move(*cut));
          break;
        }
        case CutKind::IntegerOnly:
        case CutKind::IntegerPlusLP:
          break;  // handled through use_integer_cuts
      }
    }
  }
  return cuts;
}

Assignment extract_assignment(const MasterModel& master, const std::vector<double>& x) {
  Assignment assignment;
  assignment.facility_of.assign(master.num_tasks, -1);
  for (int j = 0; j < master.num_tasks; ++j)
    for (int i = 0; i < master.num_facilities; ++i)
      if (x[master.x_col(i, j)] > 0.5) {
        assignment.facility_of[j] = i;
        break;
      }
  return assignment;
}

void fill_result_values(SolveResult& result, const Evaluation& eval) {
  result.objective = eval.objective;
  result.scenario_values = eval.scenario_values;
  result.facility_values = eval.facility_values;
  result.witness_starts = eval.starts;
}

MasterConfig with_remaining_time(const MasterConfig& config, Clock::time_point t0) {
  MasterConfig adjusted = config;
  adjusted.time_limit_seconds = config.time_limit_seconds - seconds_since(t0);
  return adjusted;
}

}  // namespace

SolveResult solve_lbbd(const Instance& instance, const MasterConfig& config) {
  const auto t0 = Clock::now();
  MasterModel master = build_master(instance, config);
  SolveResult result;
  CandidateContext ctx{instance, config, master, result.stats, t0};
  ctx.r_minus = *std::min_element(instance.release.begin(), instance.release.end());
  ctx.r_plus = *std::max_element(instance.release.begin(), instance.release.end());
  ctx.use_integer_cuts =
      config.cut_kind == CutKind::IntegerOnly || config.cut_kind == CutKind::IntegerPlusLP;
  ctx.use_lp_cuts = config.cut_kind == CutKind::IntegerPlusLP;

  double lower = -kInfinity;
  double upper = kInfinity;
  bool have_incumbent = false;

  while (true) {
    const double remaining = config.time_limit_seconds - seconds_since(t0);
    if (remaining <= 0.0) {
      result.status = SolveStatus::TimeLimit;
      break;
    }
    MilpOptions options;
    options.time_limit_seconds = remaining;
    const MilpResult mp = solve_milp(master.milp, nullptr, options);
    result.stats.nodes += mp.nodes;
    if (mp.status == SolveStatus::Infeasible) {
      result.status = have_incumbent ? SolveStatus::Optimal : SolveStatus::Infeasible;
      break;
    }
    if (mp.status == SolveStatus::TimeLimit) {
      result.status = SolveStatus::TimeLimit;
      break;
    }
    lower = std::max(lower, mp.objective);

    const Assignment assignment = extract_assignment(master, mp.x);
    const Evaluation eval =
        evaluate_assignment(instance, assignment, with_remaining_time(config, t0));
    result.stats.cp_subproblem_seconds += eval.cp_seconds;
    ++result.stats.calls;
    if (eval.timed_out) {
      result.status = SolveStatus::TimeLimit;
      break;
    }
    if (eval.feasible && eval.objective < upper) {
      upper = eval.objective;
      result.assignment = assignment;
      fill_result_values(result, eval);
      have_incumbent = true;
    }
    result.bound_history.emplace_back(lower, upper);
    if (lower >= upper - 1e-6) {
      result.status = SolveStatus::Optimal;
      break;
    }
    const std::vector<Cut> cuts = cuts_for_candidate(ctx, assignment, eval, mp.x);
    if (cuts.empty())
      throw std::logic_error("lbbd: no violated cut at an unconverged master solution");
    for (const Cut& cut : cuts) master.add_cut(cut);
    result.stats.cuts += static_cast<long long>(cuts.size());
  }

  result.stats.lower_bound = std::isfinite(lower) ? lower : 0.0;
  result.stats.upper_bound = upper;
  result.stats.hit_time_limit = result.status == SolveStatus::TimeLimit;
  result.stats.total_seconds = seconds_since(t0);
  if (result.status == SolveStatus::TimeLimit && have_incumbent)
    result.status = SolveStatus::TimeLimit;  // incumbent travels in the result
  return result;
}

namespace {

struct CallbackTimeout {};

SolveResult solve_single_tree(const Instance& instance, const MasterConfig& config,
                              bool integer_cuts, bool lp_cuts, SubproblemEngine engine) {
  const auto t0 = Clock::now();
  MasterModel master = build_master(instance, config);
  SolveResult result;
  CandidateContext ctx{instance, config, master, result.stats, t0};
  ctx.r_minus = *std::min_element(instance.release.begin(), instance.release.end());
  ctx.r_plus = *std::max_element(instance.release.begin(), instance.release.end());
  ctx.use_integer_cuts = integer_cuts;
  ctx.use_lp_cuts = lp_cuts;

  bool have_incumbent = false;
  Assignment best_assignment;
  Evaluation best_eval;

  auto exact_values = [&](const Assignment& assignment) {
    if (engine == SubproblemEngine::CpExact) {
      const Evaluation eval =
          evaluate_assignment(instance, assignment, with_remaining_time(config, t0));
      result.stats.cp_subproblem_seconds += eval.cp_seconds;
      return eval;
    }
    // time-indexed MILP engine, makespan only
    Evaluation eval;
    const int m = instance.num_facilities;
    const int S = instance.num_scenarios();
    eval.facility_values.assign(m, std::vector<double>(S, 0.0));
    eval.scenario_values.assign(S, 0.0);
    for (int i = 0; i < m; ++i) {
      const std::vector<int> tasks = assignment.jobs_on(i);
      if (tasks.empty()) continue;
      for (int w = 0; w < S; ++w) {
        const auto t_sub = Clock::now();
        SubproblemMilp sub = build_subproblem_milp(instance, i, w, tasks, /*relax=*/false);
        MilpOptions options;
        options.time_limit_seconds = config.time_limit_seconds - seconds_since(t0);
        options.row_generator = subproblem_capacity_generator(instance, i, w, tasks, sub);
        const MilpResult res = solve_milp(sub.milp, nullptr, options);
        result.stats.cp_subproblem_seconds += seconds_since(t_sub);
        if (res.status != SolveStatus::Optimal) {
          eval.timed_out = true;
          return eval;
        }
        eval.facility_values[i][w] = res.objective;
        eval.scenario_values[w] = std::max(eval.scenario_values[w], res.objective);
      }
    }
    const double lambda =
        config.dispersion == DispersionMode::MaxOverScenarios ? config.risk_lambda : 0.0;
    double expected = 0.0, worst = 0.0;
    for (int w = 0; w < S; ++w) {
      expected += instance.scenarios[w].probability * eval.scenario_values[w];
      worst = std::max(worst, eval.scenario_values[w]);
    }
    eval.objective = (1.0 - lambda) * expected + lambda * worst;
    return eval;
  };

  LazyCutCallback callback = [&](const std::vector<double>& candidate) {
    if (seconds_since(t0) >= config.time_limit_seconds) throw CallbackTimeout{};
    ++result.stats.calls;
    const Assignment assignment = extract_assignment(master, candidate);
    const Evaluation eval = exact_values(assignment);
    if (eval.timed_out) throw CallbackTimeout{};
    const std::vector<Cut> cuts = cuts_for_candidate(ctx, assignment, eval, candidate);
    std::vector<RowCut> rows;
    rows.reserve(cuts.size());
    for (const Cut& cut : cuts) rows.push_back(master.to_row(cut));
    result.stats.cuts += static_cast<long long>(rows.size());
    if (rows.empty() && eval.feasible &&
        (!have_incumbent || eval.objective < best_eval.objective)) {
      best_assignment = assignment;
      best_eval = eval;
      have_incumbent = true;
    }
    return rows;
  };

  MilpOptions options;
  options.time_limit_seconds = config.time_limit_seconds;
  MilpResult mp;
  bool timed_out = false;
  try {
    mp = solve_milp(master.milp, callback, options);
  } catch (const CallbackTimeout&) {
    timed_out = true;
  }
  result.stats.nodes = mp.nodes;

  if (timed_out || mp.status == SolveStatus::TimeLimit) {
    result.status = SolveStatus::TimeLimit;
    if (have_incumbent) {
      result.assignment = best_assignment;
      fill_result_values(result, best_eval);
      result.stats.upper_bound = best_eval.objective;
    } else {
      result.stats.upper_bound = kInfinity;
    }
    result.stats.lower_bound = timed_out ? 0.0 : mp.best_bound;
  } else if (mp.status == SolveStatus::Infeasible) {
    result.status = SolveStatus::Infeasible;
    result.stats.upper_bound = kInfinity;
    result.stats.lower_bound = kInfinity;
  } else {
    result.status = SolveStatus::Optimal;
    result.assignment = extract_assignment(master, mp.x);
    const Evaluation eval =
        evaluate_assignment(instance, result.assignment, with_remaining_time(config, t0));
    result.stats.cp_subproblem_seconds += eval.cp_seconds;
    fill_result_values(result, eval);
    result.stats.upper_bound = result.objective;
    result.stats.lower_bound = mp.best_bound;
  }
  result.stats.hit_time_limit = result.status == SolveStatus::TimeLimit;
  result.stats.total_seconds = seconds_since(t0);
  return result;
}

}  // namespace

SolveResult solve_branch_and_check(const Instance& instance, const MasterConfig& config) {
  return solve_single_tree(instance, config, /*integer_cuts=*/false, /*lp_cuts=*/false,
                           SubproblemEngine::CpExact);
}

SolveResult solve_integer_lshaped(const Instance& instance, const MasterConfig& config,
                                  SubproblemEngine engine, bool use_lp_cuts) {
  if (engine == SubproblemEngine::MilpTimeIndexed &&
      config.objective != ObjectiveMode::Makespan)
    throw std::invalid_argument("integer L-shaped: the MILP engine handles makespan only");
  if (use_lp_cuts && config.objective != ObjectiveMode::Makespan)
    throw std::invalid_argument("integer L-shaped: classical LP cuts handle makespan only");
  MasterConfig adjusted = config;
  adjusted.cut_kind = use_lp_cuts ? CutKind::IntegerPlusLP : CutKind::IntegerOnly;
  return solve_single_tree(instance, adjusted, /*integer_cuts=*/true, use_lp_cuts, engine);
}

SolveResult solve_deterministic_equivalent(const Instance& instance,
                                           const MasterConfig& config) {
  if (config.objective != ObjectiveMode::Makespan)
    throw std::invalid_argument("deterministic equivalent: makespan objective only");
  const auto t0 = Clock::now();
  TimeIndexedModel deq =
      build_deterministic_equivalent(instance, 10000, /*include_capacity_rows=*/false);
  SolveResult result;
  MilpOptions options;
  options.time_limit_seconds = config.time_limit_seconds;
  options.row_generator = capacity_row_generator(instance, deq);

  const int m = instance.num_facilities;
  const int n = instance.num_tasks;
  const int S = instance.num_scenarios();
  // fix the assignment before the start times
  options.branch_priority.assign(deq.milp.lp.num_vars, 0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) options.branch_priority[deq.x_col[i][j]] = 1;
  // integral data and uniform probabilities make the objective 1/S-granular
  bool uniform = true;
  for (const Scenario& sc : instance.scenarios)
    uniform = uniform && std::abs(sc.probability - 1.0 / S) <= 1e-12;
  if (uniform) options.objective_granularity = 1.0 / S;

  // start-column base per (i, j, w): columns are contiguous from release
  std::vector<int> z_base(static_cast<std::size_t>(m) * n * S, -1);
  for (std::size_t k = 0; k < deq.z_fac.size(); ++k) {
    const std::size_t key =
        (static_cast<std::size_t>(deq.z_fac[k]) * n + deq.z_task[k]) * S + deq.z_scen[k];
    if (z_base[key] < 0) z_base[key] = deq.z_begin + static_cast<int>(k);
  }
  // integral assignments are completed into exact-recourse incumbents
  std::map<std::vector<int>, bool> seen_assignments;
  options.primal_heuristic =
      [&](const std::vector<double>& x) -> std::optional<std::vector<double>> {
    Assignment assignment;
    assignment.facility_of.assign(n, -1);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i) {
        const double v = x[deq.x_col[i][j]];
        if (v > 1.0 - 1e-6) assignment.facility_of[j] = i;
        else if (v > 1e-6) return std::nullopt;  // fractional assignment
      }
    auto [it, fresh] = seen_assignments.emplace(assignment.facility_of, true);
    if (!fresh) return std::nullopt;
    MasterConfig eval_config = config;
    eval_config.risk_lambda = 0.0;
    eval_config.dispersion = DispersionMode::None;
    eval_config.time_limit_seconds = config.time_limit_seconds - seconds_since(t0);
    const Evaluation eval = evaluate_assignment(instance, assignment, eval_config);
    if (eval.timed_out) return std::nullopt;
    std::vector<double> point(deq.milp.lp.num_vars, 0.0);
    for (int j = 0; j < n; ++j) point[deq.x_col[assignment.facility_of[j]][j]] = 1.0;
    for (int w = 0; w < S; ++w) point[deq.beta_col[w]] = eval.scenario_values[w];
    for (int i = 0; i < m; ++i) {
      const std::vector<int> tasks = assignment.jobs_on(i);
      for (int w = 0; w < S; ++w) {
        point[deq.beta_fac_col[i][w]] = eval.facility_values[i][w];
        for (std::size_t k = 0; k < tasks.size(); ++k) {
          const int j = tasks[k];
          const std::size_t key = (static_cast<std::size_t>(i) * n + j) * S + w;
          point[z_base[key] + eval.starts[i][w][k] - instance.release[j]] = 1.0;
        }
      }
    }
    return point;
  };

  // window branching: once the assignment is integral, split the start
  // distribution of the most spread-out task at its mean start time
  options.branching_rule = [&](const std::vector<double>& x)
      -> std::optional<std::pair<std::vector<BoundChange>, std::vector<BoundChange>>> {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double v = x[deq.x_col[i][j]];
        if (v > 1e-6 && v < 1.0 - 1e-6) return std::nullopt;  // assignment first
      }
    int best_spread = 0;
    int best_key = -1;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        for (int w = 0; w < S; ++w) {
          const std::size_t key = (static_cast<std::size_t>(i) * n + j) * S + w;
          const int base = z_base[key];
          if (base < 0) continue;
          const int p = instance.scenarios[w].processing[i][j];
          const int count = deq.horizon - p - instance.release[j] + 1;
          int t_min = -1, t_max = -1;
          for (int k = 0; k < count; ++k) {
            if (x[base + k] <= 1e-6) continue;
            if (t_min < 0) t_min = k;
            t_max = k;
          }
          if (t_min >= 0 && t_max - t_min > best_spread) {
            best_spread = t_max - t_min;
            best_key = static_cast<int>(key);
          }
        }
    if (best_key < 0) return std::nullopt;
    const int i = best_key / (n * S);
    const int j = (best_key / S) % n;
    const int w = best_key % S;
    const int base = z_base[best_key];
    const int p = instance.scenarios[w].processing[i][j];
    const int count = deq.horizon - p - instance.release[j] + 1;
    double mass = 0.0, mean = 0.0;
    int t_min = -1, t_max = -1;
    for (int k = 0; k < count; ++k) {
      const double v = x[base + k];
      if (v <= 1e-6) continue;
      mass += v;
      mean += v * k;
      if (t_min < 0) t_min = k;
      t_max = k;
    }
    const int tau = std::clamp(static_cast<int>(mean / mass), t_min, t_max - 1);
    std::vector<BoundChange> early, late;
    for (int k = tau + 1; k < count; ++k) early.push_back({base + k, 0.0, 0.0});
    for (int k = 0; k <= tau; ++k) late.push_back({base + k, 0.0, 0.0});
    return std::make_pair(std::move(early), std::move(late));
  };

  const MilpResult mp = solve_milp(deq.milp, nullptr, options);
  result.stats.nodes = mp.nodes;
  result.stats.lower_bound = mp.best_bound;
  if (!mp.x.empty()) {
    Assignment assignment;
    assignment.facility_of.assign(instance.num_tasks, -1);
    for (int j = 0; j < instance.num_tasks; ++j)
      for (int i = 0; i < instance.num_facilities; ++i)
        if (mp.x[deq.x_col[i][j]] > 0.5) {
          assignment.facility_of[j] = i;
          break;
        }
    result.assignment = assignment;
    // reporting evaluation; give it a small grace budget past the limit
    MasterConfig grace = config;
    grace.time_limit_seconds =
        std::max(config.time_limit_seconds - seconds_since(t0), 10.0);
    const Evaluation eval = evaluate_assignment(instance, assignment, grace);
    result.stats.cp_subproblem_seconds += eval.cp_seconds;
    fill_result_values(result, eval);
    result.stats.upper_bound = result.objective;
  } else {
    result.stats.upper_bound = kInfinity;
  }
  result.status = mp.status;
  result.stats.hit_time_limit = result.status == SolveStatus::TimeLimit;
  result.stats.total_seconds = seconds_since(t0);
  return result;
}

}  // namespace stochplan
