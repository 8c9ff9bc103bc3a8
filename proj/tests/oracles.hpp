#pragma once

// Brute-force reference implementations used to pin expected values.  They
// enumerate exhaustively and share no code with the solvers they check.

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "stochplan/cumcp.hpp"
#include "stochplan/instance.hpp"

namespace oracle {

constexpr long long kNone = std::numeric_limits<long long>::max() / 4;

inline bool starts_feasible(const std::vector<stochplan::Job>& jobs, int capacity,
                            const std::vector<int>& starts) {
  int end_max = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (starts[k] < jobs[k].release) return false;
    if (jobs[k].deadline != stochplan::kNoDeadline &&
        starts[k] + jobs[k].processing > jobs[k].deadline)
      return false;
    end_max = std::max(end_max, starts[k] + jobs[k].processing);
  }
  for (int t = 0; t < end_max; ++t) {
    int usage = 0;
    for (std::size_t k = 0; k < jobs.size(); ++k)
      if (starts[k] <= t && t < starts[k] + jobs[k].processing) usage += jobs[k].demand;
    if (usage > capacity) return false;
  }
  return true;
}

/// Minimum objective over every integer start vector in [0, horizon]^n,
/// horizon = max release + total processing.  kNone when infeasible.
inline long long enumerate_best(const std::vector<stochplan::Job>& jobs, int capacity,
                                stochplan::CumObjective mode) {
  int horizon = 0;
  for (const auto& job : jobs) horizon = std::max(horizon, job.release);
  for (const auto& job : jobs) horizon += job.processing;
  std::vector<int> starts(jobs.size(), 0);
  long long best = kNone;
  std::function<void(std::size_t)> recurse = [&](std::size_t k) {
    if (k == jobs.size()) {
      if (!starts_feasible(jobs, capacity, starts)) return;
      long long value = 0;
      for (std::size_t q = 0; q < jobs.size(); ++q) {
        const long long completion = starts[q] + jobs[q].processing;
        if (mode == stochplan::CumObjective::Makespan)
          value = std::max(value, completion);
        else if (mode == stochplan::CumObjective::Tardiness)
          value += std::max<long long>(0, completion - jobs[q].due);
      }
      best = std::min(best, value);
      return;
    }
    for (int t = 0; t <= horizon; ++t) {
      starts[k] = t;
      recurse(k + 1);
    }
  };
  recurse(0);
  return best;
}

/// All m^n assignments as facility_of vectors, lexicographic.
inline std::vector<stochplan::Assignment> all_assignments(int facilities, int tasks) {
  std::vector<stochplan::Assignment> out;
  stochplan::Assignment current;
  current.facility_of.assign(tasks, 0);
  while (true) {
    out.push_back(current);
    int j = tasks - 1;
    while (j >= 0 && current.facility_of[j] == facilities - 1) current.facility_of[j--] = 0;
    if (j < 0) break;
    ++current.facility_of[j];
  }
  return out;
}

/// Exact subproblem value of one (facility, scenario) pair under the
/// makespan objective, by enumeration.
inline long long exact_block_makespan(const stochplan::Instance& inst,
                                      const stochplan::Assignment& assignment, int facility,
                                      int scenario) {
  std::vector<stochplan::Job> jobs;
  for (int j = 0; j < inst.num_tasks; ++j) {
    if (assignment.facility_of[j] != facility) continue;
    jobs.push_back(stochplan::Job{j, inst.release[j], stochplan::kNoDeadline, 0,
                                  inst.scenarios[scenario].processing[facility][j],
                                  inst.consumption[facility][j]});
  }
  if (jobs.empty()) return 0;
  return enumerate_best(jobs, inst.capacity[facility], stochplan::CumObjective::Makespan);
}

}  // namespace oracle
