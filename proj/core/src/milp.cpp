#include "stochplan/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace stochplan {

namespace {

struct Node {
  double bound;  // parent LP value, valid lower bound for this subtree
  int depth;
  long long seq;
  std::vector<std::tuple<int, double, double>> bound_changes;  // (var, lo, hi) from root
  LpBasis basis;
};

struct NodeOrder {
  // min-heap on bound; on ties prefer deeper then newer nodes (plunging)
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq < b.seq;
  }
};

double candidate_violation(const RowCut& cut, const std::vector<double>& x) {
  double activity = 0.0;
  for (auto [j, v] : cut.coeffs) activity += v * x[j];
  switch (cut.sense) {
    case 'G': return cut.rhs - activity;
    case 'L': return activity - cut.rhs;
    default: return std::abs(activity - cut.rhs);
  }
}

}  // namespace

MilpResult solve_milp(const MilpModel& model, const LazyCutCallback& callback,
                      const MilpOptions& options) {
  for (int j : model.integer_vars)
    if (j < 0 || j >= model.lp.num_vars)
      throw std::invalid_argument("milp: integer index out of range");
  if (options.primal_heuristic && callback)
    throw std::invalid_argument("milp: a primal heuristic cannot bypass a lazy callback");
  if (!options.branch_priority.empty() &&
      options.branch_priority.size() != static_cast<std::size_t>(model.lp.num_vars))
    throw std::invalid_argument("milp: branch_priority size mismatch");

  const double sign = model.lp.maximize ? -1.0 : 1.0;
  LpModel work = model.lp;
  work.maximize = false;
  if (sign < 0)
    for (double& c : work.objective) c = -c;

  const int num_vars = work.num_vars;
  const std::vector<double> root_lower = work.lower;
  const std::vector<double> root_upper = work.upper;
  const auto start_time = std::chrono::steady_clock::now();
  auto out_of_time = [&] {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return elapsed >= options.time_limit_seconds;
  };

  LpSolver lp_solver;
  MilpResult result;
  double incumbent = std::numeric_limits<double>::infinity();
  std::vector<double> incumbent_x;
  double global_bound = -std::numeric_limits<double>::infinity();
  bool timed_out = false;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long long seq = 0;
  open.push(Node{-std::numeric_limits<double>::infinity(), 0, seq++, {}, {}});

  while (!open.empty()) {
    if (out_of_time()) {
      timed_out = true;
      break;
    }
    Node node = open.top();
    open.pop();
    global_bound = std::max(global_bound, node.bound);
    if (node.bound >= incumbent - options.gap_tolerance) {
      // best-bound order: every remaining node is at least as bad
      global_bound = std::max(global_bound, incumbent);
      while (!open.empty()) open.pop();
      break;
    }

    // apply node bounds
    std::vector<std::tuple<int, double, double>> saved;
    saved.reserve(node.bound_changes.size());
    for (auto [j, lo, hi] : node.bound_changes) {
      saved.emplace_back(j, work.lower[j], work.upper[j]);
      work.lower[j] = std::max(work.lower[j], lo);
      work.upper[j] = std::min(work.upper[j], hi);
    }
    auto restore = [&] {
      for (auto it = saved.rbegin(); it != saved.rend(); ++it) {
        auto [j, lo, hi] = *it;
        work.lower[j] = lo;
        work.upper[j] = hi;
      }
    };

    // grow the basis snapshot for rows appended since it was taken
    const std::size_t want = static_cast<std::size_t>(num_vars) + work.rows.size();
    if (!node.basis.empty())
      while (node.basis.status.size() < want) node.basis.status.push_back(VarStatus::Basic);

    // node loop: re-solve while the callback keeps tightening the pool
    bool pruned = false;
    LpSolution lp;
    LpBasis basis;
    while (true) {
      lp = lp_solver.solve(work, node.basis.empty() ? nullptr : &node.basis, &basis);
      result.lp_iterations += lp.iterations;
      if (lp.status == LpStatus::NumericalFailure && !node.basis.empty()) {
        node.basis.status.clear();
        lp = lp_solver.solve(work, nullptr, &basis);
        result.lp_iterations += lp.iterations;
      }
      if (lp.status == LpStatus::NumericalFailure)
        throw std::runtime_error("milp: LP kernel reported a numerical failure");
      if (lp.status == LpStatus::Unbounded)
        throw std::runtime_error("milp: node relaxation unbounded; bound the model");
      if (lp.status == LpStatus::Infeasible) {
        pruned = true;
        break;
      }
      // thin-model rows first: they are part of the model, so the node
      // bound is only trusted once the point violates none of them
      if (options.row_generator) {
        const std::vector<RowCut> rows = options.row_generator(lp.x);
        if (!rows.empty()) {
          for (const RowCut& cut : rows)
            work.rows.push_back(LpRow{cut.coeffs, cut.sense, cut.rhs});
          node.basis = basis;
          while (node.basis.status.size() < static_cast<std::size_t>(num_vars) + work.rows.size())
            node.basis.status.push_back(VarStatus::Basic);
          if (out_of_time()) {
            timed_out = true;
            pruned = true;
            break;
          }
          continue;
        }
      }

      double node_value = lp.objective;  // work is already in min form
      if (options.exploit_integral_objective)
        node_value = std::ceil(node_value - options.gap_tolerance);
      if (options.objective_granularity > 0.0) {
        const double g = options.objective_granularity;
        node_value = std::ceil(node_value / g - options.gap_tolerance) * g;
      }
      node.bound = std::max(node.bound, node_value);
      if (node_value >= incumbent - options.gap_tolerance) {
        pruned = true;
        break;
      }

      if (options.primal_heuristic) {
        const std::optional<std::vector<double>> point = options.primal_heuristic(lp.x);
        if (point) {
          if (point->size() != static_cast<std::size_t>(num_vars))
            throw std::logic_error("milp: heuristic point has the wrong dimension");
          // incumbents are global, so the point answers to the root bounds
          for (int j = 0; j < num_vars; ++j)
            if ((*point)[j] < root_lower[j] - 1e-6 || (*point)[j] > root_upper[j] + 1e-6)
              throw std::logic_error("milp: heuristic point violates bounds");
          for (int j : model.integer_vars)
            if (std::abs((*point)[j] - std::round((*point)[j])) > 1e-6)
              throw std::logic_error("milp: heuristic point is fractional");
          for (const LpRow& row : work.rows) {
            double activity = 0.0;
            for (auto [j, v] : row.coeffs) activity += v * (*point)[j];
            const bool ok = row.sense == 'L'   ? activity <= row.rhs + 1e-6
                            : row.sense == 'G' ? activity >= row.rhs - 1e-6
                                               : std::abs(activity - row.rhs) <= 1e-6;
            if (!ok) throw std::logic_error("milp: heuristic point violates a row");
          }
          double heuristic_obj = 0.0;
          for (int j = 0; j < num_vars; ++j) heuristic_obj += work.objective[j] * (*point)[j];
          if (heuristic_obj < incumbent) {
            incumbent = heuristic_obj;
            incumbent_x = *point;
            if (options.node_log)
              *options.node_log << "node " << result.nodes << " heuristic incumbent "
                                << heuristic_obj << '\n';
            if (node_value >= incumbent - options.gap_tolerance) {
              pruned = true;
              break;
            }
          }
        }
      }

      // integrality check, restricted to the highest priority class that
      // still has a fractional variable
      int branch_var = -1;
      double branch_frac = options.integrality_tolerance;
      int branch_prio = std::numeric_limits<int>::min();
      for (int j : model.integer_vars) {
        const double v = lp.x[j];
        const double dist = std::abs(v - std::round(v));
        if (dist <= options.integrality_tolerance) continue;
        const int prio = options.branch_priority.empty() ? 0 : options.branch_priority[j];
        if (prio > branch_prio || (prio == branch_prio && dist > branch_frac)) {
          branch_prio = prio;
          branch_frac = dist;
          branch_var = j;
        }
      }
      if (branch_var >= 0) {
        bool branched = false;
        if (options.branching_rule) {
          if (auto split = options.branching_rule(lp.x)) {
            Node left{node.bound, node.depth + 1, seq++, node.bound_changes, basis};
            for (const BoundChange& b : split->first)
              left.bound_changes.emplace_back(b.column, b.lower, b.upper);
            Node right{node.bound, node.depth + 1, seq++, node.bound_changes, basis};
            for (const BoundChange& b : split->second)
              right.bound_changes.emplace_back(b.column, b.lower, b.upper);
            open.push(std::move(left));
            open.push(std::move(right));
            branched = true;
          }
        }
        if (!branched) {
          // default rule: most fractional variable, floor/ceil children
          const double v = lp.x[branch_var];
          Node down{node.bound, node.depth + 1, seq++, node.bound_changes, basis};
          down.bound_changes.emplace_back(branch_var, -kInfinity, std::floor(v));
          Node up{node.bound, node.depth + 1, seq++, node.bound_changes, basis};
          up.bound_changes.emplace_back(branch_var, std::ceil(v), kInfinity);
          open.push(std::move(down));
          open.push(std::move(up));
        }
        if (options.node_log)
          *options.node_log << "node " << result.nodes << " depth " << node.depth << " bound "
                            << node_value << " global " << global_bound << " branch x"
                            << branch_var << '\n';
        break;
      }

      // integer feasible candidate: round and consult the callback
      std::vector<double> candidate = lp.x;
      for (int j : model.integer_vars) candidate[j] = std::round(candidate[j]);
      double candidate_obj = 0.0;
      for (int j = 0; j < num_vars; ++j) candidate_obj += work.objective[j] * candidate[j];

      std::vector<RowCut> cuts;
      if (callback) {
        ++result.callback_calls;
        cuts = callback(candidate);
      }
      if (cuts.empty()) {
        if (candidate_obj < incumbent) {
          incumbent = candidate_obj;
          incumbent_x = candidate;
          if (options.node_log)
            *options.node_log << "node " << result.nodes << " depth " << node.depth
                              << " bound " << node_value << " global " << global_bound
                              << " incumbent " << candidate_obj << '\n';
        }
        pruned = true;
        break;
      }
      // the set must cut off the candidate; companion rows (e.g. caps on an
      // auxiliary variable) may individually be satisfied
      bool any_violated = false;
      for (const RowCut& cut : cuts)
        any_violated = any_violated || candidate_violation(cut, candidate) > 1e-7;
      if (!any_violated)
        throw std::logic_error("milp: lazy cut set is satisfied by the candidate it cuts");
      for (const RowCut& cut : cuts) {
        work.rows.push_back(LpRow{cut.coeffs, cut.sense, cut.rhs});
        ++result.cuts_added;
      }
      // enforce the new rows at this node and everywhere after
      node.basis = basis;
      while (node.basis.status.size() < static_cast<std::size_t>(num_vars) + work.rows.size())
        node.basis.status.push_back(VarStatus::Basic);
      if (out_of_time()) {
        timed_out = true;
        pruned = true;
        break;
      }
    }
    ++result.nodes;
    if (options.node_log && pruned)
      *options.node_log << "node " << result.nodes - 1 << " depth " << node.depth << " bound "
                        << node.bound << " global " << global_bound << " pruned\n";
    restore();
    if (timed_out) break;
  }

  double final_bound;
  if (!timed_out) {
    // exhausted: the incumbent (if any) is proven optimal
    final_bound = std::isfinite(incumbent) ? incumbent
                                           : std::numeric_limits<double>::infinity();
  } else if (!open.empty()) {
    final_bound = std::min(open.top().bound, incumbent);
  } else {
    final_bound = std::min(global_bound, incumbent);
  }

  result.best_bound = sign < 0 ? -final_bound : final_bound;
  if (std::isfinite(incumbent)) {
    result.objective = sign < 0 ? -incumbent : incumbent;
    result.x = incumbent_x;
    result.status = timed_out ? SolveStatus::TimeLimit : SolveStatus::Optimal;
  } else {
    result.status = timed_out ? SolveStatus::TimeLimit : SolveStatus::Infeasible;
  }
  return result;
}

}  // namespace stochplan
