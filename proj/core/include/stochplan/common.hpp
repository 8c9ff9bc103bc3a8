#pragma once

namespace stochplan {

/// Outcome of an exact solve.  Feasible means an incumbent exists but
/// optimality (or feasibility of the full problem) was not proven.
enum class SolveStatus { Optimal, Feasible, Infeasible, TimeLimit };

const char* to_string(SolveStatus status);

}  // namespace stochplan
