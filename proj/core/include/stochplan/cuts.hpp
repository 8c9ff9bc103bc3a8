#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stochplan/instance.hpp"

namespace stochplan {

/// Named master variable: an assignment binary x_ij, a scenario epigraph
/// beta_w, a facility epigraph beta_iw, the auxiliary z_iw of the
/// linearized analytic cut, or the worst-scenario epigraph beta_max.
enum class VarKind { X, BetaScenario, BetaFacility, ZAux, BetaMax };

struct VarRef {
  VarKind kind = VarKind::X;
  int facility = -1;
  int task = -1;
  int scenario = -1;

  static VarRef x(int i, int j) { return {VarKind::X, i, j, -1}; }
  static VarRef beta(int w) { return {VarKind::BetaScenario, -1, -1, w}; }
  static VarRef beta_fac(int i, int w) { return {VarKind::BetaFacility, i, -1, w}; }
  static VarRef z_aux(int i, int w) { return {VarKind::ZAux, i, -1, w}; }
  static VarRef beta_max() { return {VarKind::BetaMax, -1, -1, -1}; }
  friend bool operator==(const VarRef&, const VarRef&) = default;
};

enum class CutOrigin {
  Nogood,
  StrengthenedNogood,
  AnalyticLinearized,
  AnalyticWeak,
  IntegerLShaped,
  ClassicalLP,
  Relaxation,
  InitialBound,
};

const char* to_string(CutOrigin origin);

/// One linear inequality over master variables, sense >=.
struct Cut {
  std::vector<std::pair<VarRef, double>> coeffs;
  double rhs = 0.0;
  CutOrigin origin = CutOrigin::Nogood;
  int facility = -1;   // provenance
  int scenario = -1;
  long long iteration = -1;
};

/// Exact value of one (facility, scenario) subproblem at a fixed
/// assignment, together with the job set that produced it.
struct SubproblemValue {
  int facility = -1;
  int scenario = -1;
  double value = 0.0;
  std::vector<int> jobs;  // tasks assigned to the facility, ascending
};

/// activity(cut, point) - rhs; >= -eps means the point satisfies the cut.
double cut_slack(const Cut& cut, const std::function<double(const VarRef&)>& value_of);

/// Debug form: origin tag, (facility, scenario), coefficients, rhs.
std::string to_text(const Cut& cut);

/// beta_iw >= SP * (sum_{j in J} x_ij - |J| + 1).  Vacuous as soon as one
/// job of J leaves the facility.  Empty job set produces no cut.
std::optional<Cut> nogood_cut(const SubproblemValue& sp);

/// Greedy single-removal sweep in ascending job order: drop a job whenever
/// the re-solved subproblem value is unchanged, spending at most `budget`
/// re-solves.  `resolve` returns the exact subproblem value of a job
/// subset (+infinity works as the "still infeasible" value).
SubproblemValue strengthen_nogood(
    const SubproblemValue& sp,
    const std::function<double(const std::vector<int>&)>& resolve, int budget);

/// The three linearized rows of the analytic makespan cut:
///   beta_iw >= SP - sum (1-x_ij) p_ij - z_iw
///   z_iw <= (r+ - r-) sum (1-x_ij)
///   z_iw <= r+ - r-
/// where r+/r- are the extreme release times over all tasks.
std::vector<Cut> analytic_cut_linearized(const SubproblemValue& sp,
                                         const std::vector<int>& processing_row,
                                         int r_plus, int r_minus);

/// Single-row variant that spreads r+ - r- over |J| instead of using z.
std::optional<Cut> analytic_cut_weak(const SubproblemValue& sp,
                                     const std::vector<int>& processing_row, int r_plus,
                                     int r_minus);

/// beta_iw >= (SP - LB)(sum_{j in J} x_ij - sum_{j not in J} x_ij - |J| + 1) + LB.
Cut integer_lshaped_cut(const SubproblemValue& sp, int num_tasks, double global_lb);

/// Dual-based optimality cut from the time-indexed LP relaxation of the
/// (facility, scenario) block solved at the generating assignment:
///   beta_iw >= lp_value + sum_j nu_j (x_ij - 1)
/// with one multiplier per assigned job.
Cut classical_lp_cut(int facility, int scenario, double lp_value,
                     const std::vector<std::pair<int, double>>& job_duals);

/// Energy relaxation: beta_iw >= (1/K_i) sum_j c_ij p^w_ij x_ij per
/// (facility, scenario); installed in the initial master.
std::vector<Cut> makespan_relaxation(const Instance& instance);

/// Excludes re-assigning the full infeasible job set to the facility:
/// sum_{j in J} (1 - x_ij) >= 1.
Cut cost_feasibility_cut(const SubproblemValue& infeasible_sp);

/// Two-sided window relaxation for the min-cost variant: for every pair of
/// a distinct release t1 and a distinct finite deadline t2 > t1,
///   (1/K_i) sum_{j: [r_j,d_j] in [t1,t2]} p^min_ij c_ij x_ij <= t2 - t1.
std::vector<Cut> cost_relaxation(const Instance& instance);

/// Scenario-aggregated tardiness optimality cut at the generating
/// assignment; one cut per scenario over all facilities.
Cut tardiness_cut(const Instance& instance, int scenario,
                  const std::vector<SubproblemValue>& per_facility);

/// The two tardiness relaxation families per (facility, scenario); see the
/// README for the exact rows.
std::vector<Cut> tardiness_relaxations(const Instance& instance);

/// beta_w >= LP value of the single-scenario time-indexed relaxation, one
/// bound per scenario.  Identical bounds serve every decomposition method.
std::vector<Cut> initial_scenario_bounds(const Instance& instance);

}  // namespace stochplan
