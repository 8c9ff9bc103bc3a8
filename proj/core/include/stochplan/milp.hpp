#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stochplan/common.hpp"
#include "stochplan/lp.hpp"

namespace stochplan {

struct MilpModel {
  LpModel lp;
  std::vector<int> integer_vars;  // column indices restricted to integers
};

/// A lazy constraint produced by the callback, same row format as LpRow.
struct RowCut {
  std::vector<std::pair<int, double>> coeffs;
  char sense = 'G';
  double rhs = 0.0;
};

/// Called at every integer-feasible candidate (values rounded on the
/// integer columns).  Returning an empty list accepts the candidate as the
/// new incumbent; otherwise the returned set must cut the candidate off
/// and is enforced at all nodes from then on.
using LazyCutCallback = std::function<std::vector<RowCut>(const std::vector<double>&)>;

/// Row generation for models kept deliberately thin: called at every node
/// LP optimum (fractional or not) and must return model rows violated by
/// that point; the node re-solves until the generator comes back empty.
using RowGenerator = std::function<std::vector<RowCut>(const std::vector<double>&)>;

/// Best-effort primal heuristic: may return a full feasible point for the
/// model (it is verified against bounds, integrality and every row).  Not
/// combined with a lazy callback.
using PrimalHeuristic =
    std::function<std::optional<std::vector<double>>(const std::vector<double>&)>;

/// One tightened bound for a child node.
struct BoundChange {
  int column;
  double lower;
  double upper;
};

/// Custom branching: given the node LP point, return the bound changes of
/// the two children, which must partition the integer solutions of the
/// node.  Returning nullopt falls back to variable branching.
using BranchingRule = std::function<
    std::optional<std::pair<std::vector<BoundChange>, std::vector<BoundChange>>>(
        const std::vector<double>&)>;

struct MilpOptions {
  double time_limit_seconds = std::numeric_limits<double>::infinity();
  double integrality_tolerance = 1e-6;
  double gap_tolerance = 1e-6;  // absolute, on the objective
  /// Round the node bound up to the next integer when the objective is
  /// provably integral at integer points.  Off by default: master
  /// objectives mix probabilities into the coefficients.
  bool exploit_integral_objective = false;
  /// When > 0, objective values of integer points are known multiples of
  /// this, and node bounds round up accordingly.
  double objective_granularity = 0.0;
  /// Branching picks the most fractional variable within the highest
  /// priority class that has one (empty: single class, per the default
  /// rule).  One entry per column when set.
  std::vector<int> branch_priority;
  RowGenerator row_generator;
  PrimalHeuristic primal_heuristic;
  BranchingRule branching_rule;
  std::ostream* node_log = nullptr;
};

struct MilpResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> x;  // incumbent values, empty if none
  double objective = std::numeric_limits<double>::infinity();
  double best_bound = -std::numeric_limits<double>::infinity();
  long long nodes = 0;
  long long callback_calls = 0;
  long long cuts_added = 0;
  long long lp_iterations = 0;
};

/// Single-threaded best-bound branch and bound with depth plunging,
/// most-fractional branching (ties by lowest index) and an append-only
/// lazy-cut pool.  Deterministic for identical inputs.  Throws
/// std::logic_error if the callback returns a cut the candidate satisfies.
MilpResult solve_milp(const MilpModel& model, const LazyCutCallback& callback = nullptr,
                      const MilpOptions& options = {});

}  // namespace stochplan
