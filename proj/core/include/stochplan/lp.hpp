#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace stochplan {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(LpStatus status);

struct LpRow {
  std::vector<std::pair<int, double>> coeffs;  // (column, value), columns unique
  char sense = 'L';                            // 'L' <=, 'E' =, 'G' >=
  double rhs = 0.0;
};

/// Row-oriented LP: min (or max) c'x subject to rows and variable bounds.
struct LpModel {
  int num_vars = 0;
  bool maximize = false;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LpRow> rows;

  int add_var(double cost, double lo, double hi) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    return num_vars++;
  }
  void add_row(std::vector<std::pair<int, double>> coeffs, char sense, double rhs) {
    rows.push_back(LpRow{std::move(coeffs), sense, rhs});
  }
  int num_rows() const { return static_cast<int>(rows.size()); }
};

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  double objective = 0.0;
  std::vector<double> x;              // primal values
  std::vector<double> duals;          // per row
  std::vector<double> reduced_costs;  // per variable
  std::vector<double> farkas;         // per row; set when Infeasible
  long long iterations = 0;
};

struct LpTolerances {
  double feasibility = 1e-7;
  double optimality = 1e-6;
  double pivot = 1e-9;
};

enum class VarStatus : unsigned char { AtLower, AtUpper, Basic, Free };

/// Basis snapshot over structural variables followed by one logical per row.
struct LpBasis {
  std::vector<VarStatus> status;
  bool empty() const { return status.empty(); }
};

/// Bounded-variable primal simplex with a dense explicit basis inverse and
/// sparse column pricing.  Deterministic: identical input (and warm basis)
/// gives identical output.  Falls back to Bland's rule when the objective
/// stalls.  Never returns a wrong answer: when the numerics cannot be
/// repaired the status is NumericalFailure.
class LpSolver {
 public:
  explicit LpSolver(LpTolerances tolerances = {}) : tol_(tolerances) {}

  LpSolution solve(const LpModel& model, const LpBasis* warm_start = nullptr,
                   LpBasis* basis_out = nullptr);

 private:
  LpTolerances tol_;
};

/// Plain-text dump in an LP-style format, for debugging.
std::string to_text(const LpModel& model);

}  // namespace stochplan
