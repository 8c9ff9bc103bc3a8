#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "stochplan/common.hpp"
#include "stochplan/instance.hpp"

namespace stochplan {

/// One job of a single-facility, single-scenario cumulative scheduling
/// problem.  `due` is the soft due date used by the tardiness objective;
/// `deadline` is the hard deadline (kNoDeadline = none).
struct Job {
  int id = 0;
  int release = 0;
  int deadline = kNoDeadline;
  int due = 0;
  int processing = 1;
  int demand = 1;
};

struct Schedule {
  std::vector<int> starts;  // aligned with the job vector passed in
  long long objective = 0;
};

struct CumResult {
  SolveStatus status = SolveStatus::Infeasible;
  long long value = 0;        // objective of the returned schedule
  long long lower_bound = 0;  // proven lower bound (== value when Optimal)
  Schedule schedule;
  long long nodes = 0;
};

struct CumOptions {
  double time_limit_seconds = std::numeric_limits<double>::infinity();
  std::optional<int> upper_bound_hint;  // trusted upper bound on the optimum
  std::ostream* trace = nullptr;        // dump the search tree as text
};

/// Exact minimum makespan.  Jobs must have no deadlines in this mode.
/// Empty job set solves to 0.  A job with demand > capacity is Infeasible.
CumResult solve_min_makespan(const std::vector<Job>& jobs, int capacity,
                             const CumOptions& options = {});

/// Exact minimum total tardiness sum_j max(0, s_j + p_j - due_j).
CumResult solve_min_tardiness(const std::vector<Job>& jobs, int capacity,
                              const CumOptions& options = {});

/// Decides feasibility under hard deadlines; Feasible results carry a
/// witness schedule.
CumResult check_feasibility(const std::vector<Job>& jobs, int capacity,
                            const CumOptions& options = {});

/// max(ceil(sum c_j p_j / capacity) + min_j r_j, max_j (r_j + p_j)); a
/// valid lower bound on the minimum makespan for any releases/deadlines.
/// Returns 0 for an empty job set.
long long energy_lower_bound(const std::vector<Job>& jobs, int capacity);

enum class CumObjective { Makespan, Tardiness, Feasibility };

/// Independent witness check: replays the resource profile and the window
/// constraints from scratch.  Returns the schedule objective, or nullopt
/// if the schedule is invalid.
std::optional<long long> replay_schedule(const std::vector<Job>& jobs, int capacity,
                                         const std::vector<int>& starts,
                                         CumObjective objective);

}  // namespace stochplan
