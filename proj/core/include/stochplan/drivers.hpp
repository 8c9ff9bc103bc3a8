#pragma once

#include <memory>
#include <vector>

#include "stochplan/common.hpp"
#include "stochplan/cuts.hpp"
#include "stochplan/instance.hpp"
#include "stochplan/milp.hpp"
#include "stochplan/stats.hpp"

namespace stochplan {

enum class ObjectiveMode { Makespan, Cost, Tardiness };
enum class CutKind {
  Nogood,
  StrengthenedNogood,
  AnalyticLinearized,
  AnalyticWeak,
  IntegerOnly,
  IntegerPlusLP,
};
enum class DispersionMode { None, MaxOverScenarios };
enum class SubproblemEngine { CpExact, MilpTimeIndexed };

struct MasterConfig {
  ObjectiveMode objective = ObjectiveMode::Makespan;
  CutKind cut_kind = CutKind::Nogood;
  double risk_lambda = 0.0;
  DispersionMode dispersion = DispersionMode::None;
  bool include_relaxation = true;
  bool include_initial_bounds = true;
  double time_limit_seconds = std::numeric_limits<double>::infinity();
  /// Use the per-(facility, scenario) energy bound instead of 0 as the LB
  /// of the integer L-shaped cut.
  bool integer_cut_energy_lb = false;
  /// Shared across methods by the bench runner; the bounds only depend on
  /// the instance.
  std::shared_ptr<const std::vector<double>> initial_bounds_cache;
};

/// Master MILP plus the column layout for the named master variables.
struct MasterModel {
  MilpModel milp;
  int num_facilities = 0;
  int num_tasks = 0;
  int num_scenarios = 0;
  int x_base = 0;
  int beta_base = 0;
  int beta_fac_base = 0;
  int z_base = -1;
  int beta_max_col = -1;

  int x_col(int i, int j) const { return x_base + i * num_tasks + j; }
  int beta_col(int w) const { return beta_base + w; }
  int beta_fac_col(int i, int w) const { return beta_fac_base + i * num_scenarios + w; }
  int z_col(int i, int w) const { return z_base < 0 ? -1 : z_base + i * num_scenarios + w; }
  int column_of(const VarRef& ref) const;

  /// Appends the cut as a >= row over the mapped columns.
  void add_cut(const Cut& cut);
  /// Translates without installing (for lazy callbacks).
  RowCut to_row(const Cut& cut) const;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  Assignment assignment;
  double objective = 0.0;
  std::vector<double> scenario_values;                   // SP_w at the incumbent
  std::vector<std::vector<double>> facility_values;      // SP_iw, [i][w]
  std::vector<std::vector<std::vector<int>>> witness_starts;  // [i][w], see Evaluation
  RunStats stats;
  std::vector<std::pair<double, double>> bound_history;  // (LB, UB) per iteration
};

/// Exact recourse evaluation of a fixed assignment: solves every
/// (facility, scenario) subproblem with the CP solver and combines them
/// under the configured objective and risk weighting.
struct Evaluation {
  bool feasible = true;   // min-cost mode: all schedules exist
  bool timed_out = false;
  double objective = 0.0;
  std::vector<double> scenario_values;
  std::vector<std::vector<double>> facility_values;
  /// starts[i][w] aligned with Assignment::jobs_on(i); the witness.
  std::vector<std::vector<std::vector<int>>> starts;
  double cp_seconds = 0.0;
};
Evaluation evaluate_assignment(const Instance& instance, const Assignment& assignment,
                               const MasterConfig& config);

/// First-stage MILP over x and the beta epigraph variables, with the
/// configured relaxation rows and initial scenario bounds installed.
MasterModel build_master(const Instance& instance, const MasterConfig& config);

/// Iterative decomposition: solve the master to optimality, evaluate the
/// subproblems exactly, add one cut set per violated (facility, scenario),
/// repeat until the bounds meet.
SolveResult solve_lbbd(const Instance& instance, const MasterConfig& config);

/// Single master tree; subproblems are solved at every integer candidate
/// through a lazy-cut callback.
SolveResult solve_branch_and_check(const Instance& instance, const MasterConfig& config);

/// Branch-and-check-style tree with integer cuts (and optionally classical
/// LP-relaxation cuts) instead of logic-based ones.  The exact subproblem
/// values come from the chosen engine.
SolveResult solve_integer_lshaped(const Instance& instance, const MasterConfig& config,
                                  SubproblemEngine engine, bool use_lp_cuts);

/// Monolithic time-indexed model over all scenarios.
struct TimeIndexedModel {
  MilpModel milp;
  int horizon = 0;
  std::vector<std::vector<int>> x_col;               // [i][j]
  std::vector<int> beta_col;                         // [w]
  std::vector<std::vector<int>> beta_fac_col;        // [i][w]
  /// start-variable metadata: column z_begin+k puts task z_task[k] on
  /// facility z_fac[k] at time z_time[k] under scenario z_scen[k]
  int z_begin = 0;
  std::vector<int> z_fac, z_task, z_scen, z_time;
  bool capacity_rows_included = true;
};
TimeIndexedModel build_deterministic_equivalent(const Instance& instance,
                                                int horizon_cap = 10000,
                                                bool include_capacity_rows = true);

/// Separates violated capacity rows for a model built without them; the
/// instance and model must outlive the returned callable.
RowGenerator capacity_row_generator(const Instance& instance, const TimeIndexedModel& model);

/// Solves the deterministic equivalent and reports in the common format.
SolveResult solve_deterministic_equivalent(const Instance& instance,
                                           const MasterConfig& config);

/// LP value of the single-scenario deterministic equivalent: the initial
/// bound beta^LB_w.
double scenario_lp_bound(const Instance& instance, int scenario);

}  // namespace stochplan
