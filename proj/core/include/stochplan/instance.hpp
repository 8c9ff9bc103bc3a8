#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace stochplan {

/// Sentinel for "no deadline".
inline constexpr int kNoDeadline = std::numeric_limits<int>::max();

/// One realization of the random processing times.
struct Scenario {
  double probability = 0.0;
  /// processing[i][j]: integer processing time of task j on facility i, >= 1.
  std::vector<std::vector<int>> processing;
};

/// A two-stage planning-and-scheduling instance: tasks are assigned to
/// facilities up front, then scheduled per facility once the scenario is
/// known.  All data are integral except probabilities and assignment costs.
struct Instance {
  int num_facilities = 0;
  int num_tasks = 0;
  std::vector<int> capacity;                        // per facility
  std::vector<int> release;                         // per task
  std::vector<int> deadline;                        // per task, kNoDeadline = none
  std::optional<std::vector<int>> due_date;         // per task (tardiness variant)
  std::vector<std::vector<int>> consumption;        // [facility][task]
  std::optional<std::vector<std::vector<double>>> assign_cost;  // [facility][task]
  std::vector<Scenario> scenarios;

  int num_scenarios() const { return static_cast<int>(scenarios.size()); }

  /// Throws std::invalid_argument naming the offending field if any
  /// structural invariant is violated (dimensions, probability sum,
  /// consumption/processing ranges, negative releases).
  void validate() const;
};

/// First-stage decision: facility_of[j] is the facility task j runs on.
struct Assignment {
  std::vector<int> facility_of;

  /// Tasks assigned to `facility`, ascending.
  std::vector<int> jobs_on(int facility) const;
};

/// How scenario perturbations are drawn: one draw per (scenario, group) as
/// in the default recipe, or an independent draw per (scenario, facility,
/// task) entry.
enum class PerturbationMode { PerScenarioGroup, PerScenarioEntry };

/// Random instance recipe.  Capacities are 10, consumptions uniform on
/// [1,10], releases uniform on [0, floor(2.5 n (m+1)/m)], mean processing
/// times uniform on [2, floor(25 - 10(i-1)/max(m-1,1))] for facility i, and
/// scenario processing times are ceil(mean * (1 + eps)) where eps comes
/// from a two-group mixture of uniforms (group 1: mean <= 16).  Identical
/// arguments produce a bit-identical instance.
Instance generate(int num_facilities, int num_tasks, int num_scenarios,
                  std::uint64_t seed,
                  PerturbationMode mode = PerturbationMode::PerScenarioGroup);

/// JSON file round trip.  See README for the schema; probabilities are
/// serialized as decimal strings.  Both ends validate().
void to_file(const Instance& instance, const std::string& path);
Instance from_file(const std::string& path);

std::string to_json_string(const Instance& instance);
Instance from_json_string(const std::string& text);

}  // namespace stochplan
