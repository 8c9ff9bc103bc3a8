#pragma once

namespace stochplan {

/// Per-run counters shared by all solution methods.  Subproblem time is
/// split between exact solves (cp) and LP relaxations (lp), mirroring the
/// CSV columns.
struct RunStats {
  double total_seconds = 0.0;
  double cp_subproblem_seconds = 0.0;
  double lp_subproblem_seconds = 0.0;
  long long cuts = 0;
  long long calls = 0;  // callback invocations / master iterations
  long long nodes = 0;
  double upper_bound = 0.0;
  double lower_bound = 0.0;
  bool hit_time_limit = false;
};

/// Relative optimality gap (ub - lb) / ub; 0 when both are 0.  Requires
/// lb <= ub + 1e-9.
double gap(double ub, double lb);

}  // namespace stochplan
