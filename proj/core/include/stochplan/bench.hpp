#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stochplan/drivers.hpp"
#include "stochplan/stats.hpp"

namespace stochplan {

enum class Method {
  DeterministicEquivalent,
  Lbbd,
  BranchAndCheck,
  IntegerLShaped,    // time-indexed MILP subproblems + classical LP cuts
  IntegerLShapedCp,  // CP subproblems + classical LP cuts
  IntegerLShapedInt, // CP subproblems, integer cuts only
};

struct MethodSpec {
  Method method = Method::BranchAndCheck;
  CutKind cuts = CutKind::Nogood;
};

/// "deq", "lbbd", "bcheck", "ilshaped", "ilshaped-cp", "ilshaped-int";
/// throws std::invalid_argument on anything else.
Method parse_method(const std::string& name);
CutKind parse_cut_kind(const std::string& name);  // nogood | strengthened | analytic | analytic-weak
std::string method_label(const MethodSpec& spec);

/// Runs one method on one instance under the given base configuration.
SolveResult run_method(const Instance& instance, const MethodSpec& spec,
                       const MasterConfig& base_config);

struct ExperimentGrid {
  std::vector<int> task_counts{10};
  std::vector<int> facility_counts{2};
  std::vector<int> scenario_counts{1};
  int instances_per_cell = 3;
  std::vector<MethodSpec> methods;
  std::uint64_t base_seed = 1;
  double time_limit_seconds = 60.0;
  int workers = 1;
  /// Wall-clock columns make CSV bytes run-dependent; turning them off
  /// yields byte-identical files for identical seeds.
  bool include_times = true;
};

/// Seed of instance k of cell (tasks, facilities, scenarios); documented so
/// runs can be reproduced one-off via `solve`.
std::uint64_t grid_seed(const ExperimentGrid& grid, int tasks, int facilities, int scenarios,
                        int k);

/// One CSV row per (cell, method, instance) plus one average row per
/// (cell, method); averages skip runs that hit the time limit and record
/// how many were skipped.  Cells run in grid order; with workers > 1 the
/// (cell, instance) units run concurrently but rows keep the same order.
void run_grid(const ExperimentGrid& grid, std::ostream& out);
void run_grid(const ExperimentGrid& grid, const std::string& csv_path);

/// Full command line: generate | solve | bench | validate.  Returns the
/// process exit code (0 ok, 2 usage error, 3 time limit with incumbent).
int run_cli(int argc, const char* const* argv);

}  // namespace stochplan
