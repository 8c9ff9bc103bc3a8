#include "stochplan/cumcp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

namespace stochplan {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::TimeLimit: return "TimeLimit";
  }
  return "?";
}

long long energy_lower_bound(const std::vector<Job>& jobs, int capacity) {
  if (jobs.empty()) return 0;
  long long energy = 0;
  int min_release = std::numeric_limits<int>::max();
  long long tail = 0;
  for (const Job& job : jobs) {
    energy += static_cast<long long>(job.demand) * job.processing;
    min_release = std::min(min_release, job.release);
    tail = std::max(tail, static_cast<long long>(job.release) + job.processing);
  }
  const long long packed = (energy + capacity - 1) / capacity + min_release;
  return std::max(packed, tail);
}

namespace {

constexpr long long kInf = std::numeric_limits<long long>::max() / 4;

// Depth-first branch and bound over left-shifted schedules: jobs are placed
// in nondecreasing (start, id) order and every start is either a release
// time or the completion time of an already placed job.  Any feasible
// schedule can be left-shifted job by job without increasing a regular
// objective or violating deadlines, and in a fully left-shifted schedule a
// start above the release is blocked by a job that completes exactly there
// and starts strictly earlier, so this enumeration is exhaustive.
class CumSolver {
 public:
  CumSolver(const std::vector<Job>& jobs, int capacity, CumObjective mode,
            const CumOptions& options)
      : jobs_(jobs), capacity_(capacity), mode_(mode), options_(options) {}

  CumResult run() {
    CumResult result;
    for (const Job& job : jobs_) {
      if (job.demand > capacity_) {
        result.status = SolveStatus::Infeasible;
        return result;
      }
    }
    if (jobs_.empty()) {
      result.status = SolveStatus::Optimal;
      result.value = result.lower_bound = 0;
      return result;
    }

    horizon_ = 0;
    int max_p = 0;
    for (const Job& job : jobs_) {
      horizon_ = std::max(horizon_, job.release);
      max_p = std::max(max_p, job.processing);
    }
    for (const Job& job : jobs_) horizon_ += job.processing;
    usage_.assign(static_cast<std::size_t>(horizon_) + max_p + 1, 0);
    starts_.assign(jobs_.size(), -1);

    root_bound_ = mode_ == CumObjective::Makespan ? energy_lower_bound(jobs_, capacity_) : 0;
    best_value_ = kInf;
    greedy_incumbent();
    if (options_.upper_bound_hint)
      cutoff_ = std::min(best_value_, static_cast<long long>(*options_.upper_bound_hint));
    else
      cutoff_ = best_value_;

    if (std::isfinite(options_.time_limit_seconds) && options_.time_limit_seconds < 1e9) {
      deadline_clock_ = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(
                                std::max(options_.time_limit_seconds, 0.0)));
    } else {
      deadline_clock_ = std::chrono::steady_clock::time_point::max();
    }
    timed_out_ = false;

    if (mode_ == CumObjective::Feasibility && found_witness_) {
      // greedy already produced a deadline-respecting schedule
      result.status = SolveStatus::Feasible;
      result.schedule.starts = best_starts_;
      result.schedule.objective = 0;
      result.nodes = nodes_;
      return result;
    }

    dfs(0, 0, -1, 0, 0);

    result.nodes = nodes_;
    if (mode_ == CumObjective::Feasibility) {
      if (found_witness_) {
        result.status = SolveStatus::Feasible;
        result.schedule.starts = best_starts_;
      } else {
        result.status = timed_out_ ? SolveStatus::TimeLimit : SolveStatus::Infeasible;
      }
      return result;
    }

    result.value = best_value_;
    result.schedule.starts = best_starts_;
    result.schedule.objective = best_value_;
    if (timed_out_) {
      result.status = SolveStatus::TimeLimit;
      result.lower_bound = root_bound_;
    } else {
      result.status = SolveStatus::Optimal;
      result.lower_bound = best_value_;
    }
    return result;
  }

 private:
  bool time_up() {
    if (timed_out_) return true;
    if ((nodes_ & 0x3f) == 0 && std::chrono::steady_clock::now() >= deadline_clock_)
      timed_out_ = true;
    return timed_out_;
  }

  bool fits(const Job& job, int t) const {
    if (t < job.release) return false;
    if (job.deadline != kNoDeadline && t + job.processing > job.deadline) return false;
    for (int tau = t; tau < t + job.processing; ++tau)
      if (usage_[tau] + job.demand > capacity_) return false;
    return true;
  }

  void place(const Job& job, int t, int delta) {
    for (int tau = t; tau < t + job.processing; ++tau) usage_[tau] += delta * job.demand;
  }

  // Greedy serial schedule used as the initial incumbent: earliest feasible
  // start in a fixed job order (by release, due date, or deadline depending
  // on the objective).
  void greedy_incumbent() {
    std::vector<int> order(jobs_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const Job& ja = jobs_[a];
      const Job& jb = jobs_[b];
      switch (mode_) {
        case CumObjective::Tardiness:
          return std::tie(ja.due, ja.release, ja.id) < std::tie(jb.due, jb.release, jb.id);
        case CumObjective::Feasibility:
          return std::tie(ja.deadline, ja.release, ja.id) <
                 std::tie(jb.deadline, jb.release, jb.id);
        default:
          return std::tie(ja.release, ja.id) < std::tie(jb.release, jb.id);
      }
    });
    std::vector<int> starts(jobs_.size(), -1);
    bool ok = true;
    for (int k : order) {
      const Job& job = jobs_[k];
      int t = job.release;
      while (t <= horizon_ && !fits_ignoring_deadline(job, t)) ++t;
      if (job.deadline != kNoDeadline && t + job.processing > job.deadline) ok = false;
      starts[k] = t;
      place(job, t, +1);
    }
    for (std::size_t k = 0; k < jobs_.size(); ++k) place(jobs_[k], starts[k], -1);
    if (mode_ == CumObjective::Feasibility) {
      if (ok) {
        found_witness_ = true;
        best_starts_ = starts;
      }
      return;
    }
    best_starts_ = starts;
    best_value_ = objective_of(starts);
  }

  bool fits_ignoring_deadline(const Job& job, int t) const {
    for (int tau = t; tau < t + job.processing; ++tau)
      if (usage_[tau] + job.demand > capacity_) return false;
    return true;
  }

  long long objective_of(const std::vector<int>& starts) const {
    long long value = 0;
    for (std::size_t k = 0; k < jobs_.size(); ++k) {
      const long long completion = starts[k] + jobs_[k].processing;
      if (mode_ == CumObjective::Makespan)
        value = std::max(value, completion);
      else
        value += std::max<long long>(0, completion - jobs_[k].due);
    }
    return value;
  }

  // Lower bound on any completion of the current node.  `last_start` is the
  // chronological frontier: every unplaced job starts at or after it.
  long long node_bound(int placed, int last_start, long long completion_max,
                       long long tardiness) const {
    if (mode_ == CumObjective::Tardiness) {
      long long bound = tardiness;
      for (std::size_t k = 0; k < jobs_.size(); ++k) {
        if (starts_[k] >= 0) continue;
        const long long finish =
            std::max(jobs_[k].release, last_start) + jobs_[k].processing;
        bound += std::max<long long>(0, finish - jobs_[k].due);
      }
      return bound;
    }
    long long bound = completion_max;
    long long rest_energy = 0;
    for (std::size_t k = 0; k < jobs_.size(); ++k) {
      if (starts_[k] >= 0) continue;
      const Job& job = jobs_[k];
      bound = std::max(bound, static_cast<long long>(std::max(job.release, last_start)) +
                                  job.processing);
      rest_energy += static_cast<long long>(job.demand) * job.processing;
    }
    if (rest_energy > 0 && placed < static_cast<int>(jobs_.size())) {
      long long occupied = 0;  // area already committed at or after the frontier
      for (std::size_t k = 0; k < jobs_.size(); ++k) {
        if (starts_[k] < 0) continue;
        const int end = starts_[k] + jobs_[k].processing;
        if (end > last_start)
          occupied += static_cast<long long>(end - std::max(starts_[k], last_start)) *
                      jobs_[k].demand;
      }
      bound = std::max(bound, last_start + (rest_energy + occupied + capacity_ - 1) / capacity_);
    }
    return bound;
  }

  // Deadline and timetable check for feasibility mode: unplaced jobs must
  // still fit their windows, and the mandatory parts of their windows must
  // not overload the profile.
  bool windows_admissible(int last_start) {
    for (std::size_t k = 0; k < jobs_.size(); ++k) {
      if (starts_[k] >= 0) continue;
      const Job& job = jobs_[k];
      if (job.deadline == kNoDeadline) continue;
      const int est = std::max(job.release, last_start);
      const int lst = job.deadline - job.processing;
      if (est > lst) return false;
      // mandatory part [lst, est + p)
      for (int tau = lst; tau < est + job.processing; ++tau)
        if (usage_[tau] + job.demand > capacity_) return false;
    }
    return true;
  }

  void dfs(int placed, int last_start, int last_index, long long completion_max,
           long long tardiness) {
    if (time_up()) return;
    ++nodes_;

    if (placed == static_cast<int>(jobs_.size())) {
      if (mode_ == CumObjective::Feasibility) {
        found_witness_ = true;
        best_starts_ = starts_;
      } else {
        const long long value = mode_ == CumObjective::Makespan ? completion_max : tardiness;
        if (value < best_value_) {
          best_value_ = value;
          best_starts_ = starts_;
          cutoff_ = std::min(cutoff_, best_value_);
        }
      }
      return;
    }

    if (mode_ != CumObjective::Feasibility) {
      const long long bound = node_bound(placed, last_start, completion_max, tardiness);
      if (bound >= cutoff_) return;
    } else if (!windows_admissible(last_start)) {
      return;
    }

    // candidate start times: releases and completions of placed jobs
    candidates_.clear();
    for (const Job& job : jobs_)
      if (job.release >= last_start) candidates_.push_back(job.release);
    for (std::size_t k = 0; k < jobs_.size(); ++k) {
      if (starts_[k] < 0) continue;
      const int completion = starts_[k] + jobs_[k].processing;
      if (completion >= last_start) candidates_.push_back(completion);
    }
    std::sort(candidates_.begin(), candidates_.end());
    candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());

    // branch over (t, job) pairs in chronological order
    const std::vector<int> times = candidates_;
    for (int t : times) {
      for (std::size_t k = 0; k < jobs_.size(); ++k) {
        if (starts_[k] >= 0) continue;
        const Job& job = jobs_[k];
        if (t == last_start && static_cast<int>(k) <= last_index) continue;  // tie rule
        if (!fits(job, t)) continue;
        starts_[k] = t;
        place(job, t, +1);
        if (options_.trace) {
          for (int d = 0; d < placed; ++d) *options_.trace << "  ";
          *options_.trace << "job " << job.id << " @ " << t << '\n';
        }
        dfs(placed + 1, t, static_cast<int>(k),
            std::max(completion_max, static_cast<long long>(t) + job.processing),
            tardiness + std::max<long long>(0, t + job.processing - job.due));
        place(job, t, -1);
        starts_[k] = -1;
        if (mode_ == CumObjective::Feasibility && found_witness_) return;
        if (timed_out_) return;
      }
    }
  }

  const std::vector<Job>& jobs_;
  int capacity_;
  CumObjective mode_;
  const CumOptions& options_;

  int horizon_ = 0;
  std::vector<int> usage_;
  std::vector<int> starts_;
  std::vector<int> candidates_;
  std::vector<int> best_starts_;
  long long best_value_ = kInf;
  long long cutoff_ = kInf;
  long long root_bound_ = 0;
  long long nodes_ = 0;
  bool found_witness_ = false;
  bool timed_out_ = false;
  std::chrono::steady_clock::time_point deadline_clock_;
};

}  // namespace

CumResult solve_min_makespan(const std::vector<Job>& jobs, int capacity,
                             const CumOptions& options) {
  return CumSolver(jobs, capacity, CumObjective::Makespan, options).run();
}

CumResult solve_min_tardiness(const std::vector<Job>& jobs, int capacity,
                              const CumOptions& options) {
  return CumSolver(jobs, capacity, CumObjective::Tardiness, options).run();
}

CumResult check_feasibility(const std::vector<Job>& jobs, int capacity,
                            const CumOptions& options) {
  return CumSolver(jobs, capacity, CumObjective::Feasibility, options).run();
}

std::optional<long long> replay_schedule(const std::vector<Job>& jobs, int capacity,
                                         const std::vector<int>& starts,
                                         CumObjective objective) {
  if (starts.size() != jobs.size()) return std::nullopt;
  int end_max = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const Job& job = jobs[k];
    if (starts[k] < job.release) return std::nullopt;
    if (job.deadline != kNoDeadline && starts[k] + job.processing > job.deadline)
      return std::nullopt;
    end_max = std::max(end_max, starts[k] + job.processing);
  }
  std::vector<int> usage(static_cast<std::size_t>(end_max) + 1, 0);
  for (std::size_t k = 0; k < jobs.size(); ++k)
    for (int tau = starts[k]; tau < starts[k] + jobs[k].processing; ++tau) {
      usage[tau] += jobs[k].demand;
      if (usage[tau] > capacity) return std::nullopt;
    }
  long long value = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const long long completion = starts[k] + jobs[k].processing;
    if (objective == CumObjective::Makespan)
      value = std::max(value, completion);
    else if (objective == CumObjective::Tardiness)
      value += std::max<long long>(0, completion - jobs[k].due);
  }
  return value;
}

}  // namespace stochplan
