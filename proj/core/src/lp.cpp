#include "stochplan/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace stochplan {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

namespace {

// Bounded-variable simplex over the equality system A x - s = 0; the row
// senses live in the bounds of the logical variables s.  Columns 0..n-1
// are structural, n..n+m-1 the logicals.  The basis inverse is kept
// explicitly (dense) with product-form updates and periodic
// refactorization; dual prices are updated incrementally, which stays
// exact because the ratio test never lets a basic variable cross a bound
// within a step, so phase-1 costs only change for the leaving variable.
class Simplex {
 public:
  Simplex(const LpModel& model, const LpTolerances& tol) : model_(model), tol_(tol) {
    n_ = model.num_vars;
    m_ = model.num_rows();
    total_ = n_ + m_;
    cols_.resize(n_);
    for (int r = 0; r < m_; ++r)
      for (auto [j, v] : model.rows[r].coeffs)
        if (v != 0.0) cols_[j].push_back({r, v});
    cost_.assign(total_, 0.0);
    const double sign = model.maximize ? -1.0 : 1.0;
    for (int j = 0; j < n_; ++j) cost_[j] = sign * model.objective[j];
    lo_.assign(total_, 0.0);
    up_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = model.lower[j];
      up_[j] = model.upper[j];
    }
    for (int r = 0; r < m_; ++r) {
      const LpRow& row = model.rows[r];
      switch (row.sense) {
        case 'L': lo_[n_ + r] = -kInfinity; up_[n_ + r] = row.rhs; break;
        case 'G': lo_[n_ + r] = row.rhs; up_[n_ + r] = kInfinity; break;
        case 'E': lo_[n_ + r] = up_[n_ + r] = row.rhs; break;
        default: throw std::invalid_argument("lp: unknown row sense");
      }
    }
  }

  LpSolution run(const LpBasis* warm, LpBasis* basis_out) {
    LpSolution sol;
    for (int j = 0; j < total_; ++j)
      if (lo_[j] > up_[j] + tol_.feasibility) {
        sol.status = LpStatus::Infeasible;
        sol.farkas.assign(m_, 0.0);
        return sol;
      }

    install_basis(warm);
    LpStatus status = run_phase(/*phase1=*/true);
    sol.iterations = iterations_;
    if (status == LpStatus::NumericalFailure) {
      sol.status = status;
      return sol;
    }
    if (total_infeasibility() > infeasibility_tolerance()) {
      sol.status = LpStatus::Infeasible;
      compute_duals(/*phase1=*/true);
      sol.farkas.assign(m_, 0.0);
      // aggregate certificate; flipped so it reads as a >= combination
      for (int r = 0; r < m_; ++r) sol.farkas[r] = -y_[r];
      export_basis(basis_out);
      return sol;
    }
    status = run_phase(/*phase1=*/false);
    sol.iterations = iterations_;
    if (status != LpStatus::Optimal) {
      sol.status = status;
      export_basis(basis_out);
      return sol;
    }

    sol.status = LpStatus::Optimal;
    sol.x.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) sol.x[j] = value_[j];
    compute_duals(/*phase1=*/false);
    const double sign = model_.maximize ? -1.0 : 1.0;
    sol.duals.assign(m_, 0.0);
    for (int r = 0; r < m_; ++r) sol.duals[r] = sign * y_[r];
    sol.reduced_costs.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) sol.reduced_costs[j] = sign * (cost_[j] - price(j));
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += model_.objective[j] * sol.x[j];
    sol.objective = obj;
    export_basis(basis_out);
    return sol;
  }

 private:
  static constexpr int kRefactorInterval = 100;

  double infeasibility_tolerance() const { return tol_.feasibility * (1.0 + m_); }

  void install_basis(const LpBasis* warm) {
    status_.assign(total_, VarStatus::AtLower);
    basic_.clear();
    if (warm != nullptr && static_cast<int>(warm->status.size()) == total_) {
      status_ = warm->status;
      for (int j = 0; j < total_; ++j)
        if (status_[j] == VarStatus::Basic) basic_.push_back(j);
      if (static_cast<int>(basic_.size()) == m_ && refactor()) {
        set_nonbasic_values();
        compute_basic_values();
        return;
      }
    }
    reset_to_logical_basis();
  }

  // all-logical basis: B = -I, trivially invertible
  void reset_to_logical_basis() {
    status_.assign(total_, VarStatus::AtLower);
    for (int j = 0; j < n_; ++j) status_[j] = default_nonbasic_status(j);
    basic_.resize(m_);
    for (int r = 0; r < m_; ++r) {
      basic_[r] = n_ + r;
      status_[n_ + r] = VarStatus::Basic;
    }
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int r = 0; r < m_; ++r) binv_[idx(r, r)] = -1.0;
    pivots_since_refactor_ = 0;
    set_nonbasic_values();
    compute_basic_values();
  }

  VarStatus default_nonbasic_status(int j) const {
    const bool lo_fin = std::isfinite(lo_[j]);
    const bool up_fin = std::isfinite(up_[j]);
    if (!lo_fin && !up_fin) return VarStatus::Free;
    if (lo_fin && up_fin)
      return std::abs(lo_[j]) <= std::abs(up_[j]) ? VarStatus::AtLower : VarStatus::AtUpper;
    return lo_fin ? VarStatus::AtLower : VarStatus::AtUpper;
  }

  void set_nonbasic_values() {
    value_.assign(total_, 0.0);
    for (int j = 0; j < total_; ++j) {
      switch (status_[j]) {
        case VarStatus::AtLower: value_[j] = lo_[j]; break;
        case VarStatus::AtUpper: value_[j] = up_[j]; break;
        case VarStatus::Free: value_[j] = 0.0; break;
        case VarStatus::Basic: break;
      }
    }
  }

  // x_B = -B^{-1} * sum_{nonbasic j} A_j x_j
  void compute_basic_values() {
    std::vector<double> rhs(m_, 0.0);
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::Basic) continue;
      const double v = value_[j];
      if (v == 0.0) continue;
      add_column(rhs, j, v);
    }
    for (int r = 0; r < m_; ++r) {
      double acc = 0.0;
      for (int k = 0; k < m_; ++k) acc -= binv_[idx(r, k)] * rhs[k];
      value_[basic_[r]] = acc;
    }
  }

  void add_column(std::vector<double>& target, int j, double mult) const {
    if (j < n_) {
      for (auto [r, v] : cols_[j]) target[r] += mult * v;
    } else {
      target[j - n_] -= mult;
    }
  }

  double price(int j) const {
    if (j < n_) {
      double acc = 0.0;
      for (auto [r, v] : cols_[j]) acc += y_[r] * v;
      return acc;
    }
    return -y_[j - n_];
  }

  // w = B^{-1} A_j
  void ftran(int j, std::vector<double>& w) const {
    w.assign(m_, 0.0);
    if (j < n_) {
      for (auto [r, v] : cols_[j])
        for (int i = 0; i < m_; ++i) w[i] += binv_[idx(i, r)] * v;
    } else {
      const int r = j - n_;
      for (int i = 0; i < m_; ++i) w[i] = -binv_[idx(i, r)];
    }
  }

  double phase_cost(int j, bool phase1) const {
    if (!phase1) return cost_[j];
    if (status_[j] != VarStatus::Basic) return 0.0;
    if (value_[j] < lo_[j] - tol_.feasibility) return -1.0;
    if (value_[j] > up_[j] + tol_.feasibility) return 1.0;
    return 0.0;
  }

  // y = c_B^T B^{-1} from scratch
  void compute_duals(bool phase1) {
    y_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const double c = phase_cost(basic_[i], phase1);
      if (c == 0.0) continue;
      for (int k = 0; k < m_; ++k) y_[k] += c * binv_[idx(i, k)];
    }
  }

  double total_infeasibility() const {
    double t = 0.0;
    for (int r = 0; r < m_; ++r) {
      const int j = basic_[r];
      if (value_[j] < lo_[j]) t += lo_[j] - value_[j];
      else if (value_[j] > up_[j]) t += value_[j] - up_[j];
    }
    return t;
  }

  // Gauss-Jordan inversion of the basis with partial pivoting.  A basis
  // column that turns out dependent is repaired in place: it is demoted to
  // a bound and the logical of a still-unpivoted row takes its slot (its
  // representation under the accumulated row operations is -inv[:,row]).
  bool refactor() {
    if (debug_ > 2) fprintf(stderr, "lp: refactor iter %lld m %d\n", iterations_, m_);
    std::vector<double> mat(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int c = 0; c < m_; ++c) {
      const int j = basic_[c];
      if (j < n_) {
        for (auto [r, v] : cols_[j]) mat[idx(r, c)] = v;
      } else {
        mat[idx(j - n_, c)] = -1.0;
      }
    }
    std::vector<double> inv(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int r = 0; r < m_; ++r) inv[idx(r, r)] = 1.0;
    std::vector<int> perm(m_);  // physical row -> original row
    for (int r = 0; r < m_; ++r) perm[r] = r;
    for (int col = 0; col < m_; ++col) {
      int piv = -1;
      double best = 1e-9;
      for (int r = col; r < m_; ++r)
        if (std::abs(mat[idx(r, col)]) > best) {
          best = std::abs(mat[idx(r, col)]);
          piv = r;
        }
      if (piv < 0) {
        // dependent column: bring in the logical of an unpivoted row
        int repl_row = -1;
        double repl_best = 1e-9;
        for (int r = col; r < m_; ++r) {
          if (status_[n_ + perm[r]] == VarStatus::Basic) continue;  // already in the basis
          const double cand = std::abs(inv[idx(r, perm[r])]);
          if (cand > repl_best) {
            repl_best = cand;
            repl_row = r;
          }
        }
        if (repl_row < 0) {
          if (debug_) fprintf(stderr, "lp: repair failed at col %d iter %lld\n", col, iterations_);
          return false;
        }
        const int orig = perm[repl_row];
        const int displaced = basic_[col];
        status_[displaced] = default_nonbasic_status(displaced);
        value_[displaced] = status_[displaced] == VarStatus::AtUpper ? up_[displaced]
                            : status_[displaced] == VarStatus::AtLower ? lo_[displaced]
                                                                       : 0.0;
        basic_[col] = n_ + orig;
        status_[n_ + orig] = VarStatus::Basic;
        for (int r = 0; r < m_; ++r) mat[idx(r, col)] = -inv[idx(r, orig)];
        --col;  // redo this column with the replacement
        continue;
      }
      if (piv != col) {
        for (int k = 0; k < m_; ++k) {
          std::swap(mat[idx(piv, k)], mat[idx(col, k)]);
          std::swap(inv[idx(piv, k)], inv[idx(col, k)]);
        }
        std::swap(perm[piv], perm[col]);
      }
      const double d = mat[idx(col, col)];
      for (int k = 0; k < m_; ++k) {
        mat[idx(col, k)] /= d;
        inv[idx(col, k)] /= d;
      }
      for (int r = 0; r < m_; ++r) {
        if (r == col) continue;
        const double f = mat[idx(r, col)];
        if (f == 0.0) continue;
        for (int k = 0; k < m_; ++k) {
          mat[idx(r, k)] -= f * mat[idx(col, k)];
          inv[idx(r, k)] -= f * inv[idx(col, k)];
        }
      }
    }
    binv_ = std::move(inv);
    pivots_since_refactor_ = 0;
    return true;
  }

  // refactor, or rebuild from the all-logical basis when the stored basis
  // has degraded into singularity
  bool refactor_or_reset(bool phase1) {
    if (refactor()) {
      compute_basic_values();
      compute_duals(phase1);
      return true;
    }
    if (++resets_ > 3) return false;
    if (getenv("STOCHPLAN_LP_DEBUG")) fprintf(stderr, "lp: basis reset #%d at iter %lld\n", resets_, iterations_);
    // a plain reset would deterministically replay the same trajectory
    force_bland_ = true;
    reset_to_logical_basis();
    compute_duals(phase1);
    return true;
  }

  LpStatus run_phase(bool phase1) {
    const long long iteration_cap = 20000 + 200LL * (m_ + n_);
    int stall = 0;
    bool bland = force_bland_;
    // a phase only ends on numbers recomputed from a fresh factorization
    bool confirmed = false;
    auto confirm = [&] {
      if (!refactor_or_reset(phase1)) return false;
      confirmed = true;
      return true;
    };
    double last_objective = phase_objective(phase1);
    std::vector<double> w;
    compute_duals(phase1);
    while (true) {
      if (phase1 && total_infeasibility() <= infeasibility_tolerance()) {
        if (confirmed) return LpStatus::Optimal;
        if (!confirm()) return LpStatus::NumericalFailure;
        continue;
      }
      if (++iterations_ > iteration_cap) return LpStatus::NumericalFailure;
      if (debug_ && iterations_ % 2000 == 0)
        fprintf(stderr, "lp: iter %lld phase%d m=%d infeas %.6g obj %.6g bland %d\n",
                iterations_, phase1 ? 1 : 2, m_, total_infeasibility(),
                phase_objective(false), bland ? 1 : 0);
      // phase-1 costs depend on the current basic values, so those prices
      // are rebuilt every iteration; phase-2 costs are static and the
      // incremental update after each pivot stays exact
      if (phase1) compute_duals(true);
      if (debug_ > 1 && iterations_ < 200)
        fprintf(stderr, "  it %lld ph%d infeas %.4g\n", iterations_, phase1 ? 1 : 2, total_infeasibility());

      // pricing
      int entering = -1;
      int direction = 0;
      double best_score = tol_.optimality;
      for (int j = 0; j < total_; ++j) {
        const VarStatus st = status_[j];
        if (st == VarStatus::Basic) continue;
        const double d = (phase1 ? 0.0 : cost_[j]) - price(j);
        int dir = 0;
        double score = 0.0;
        if ((st == VarStatus::AtLower || st == VarStatus::Free) && d < -best_score) {
          dir = +1;
          score = -d;
        } else if ((st == VarStatus::AtUpper || st == VarStatus::Free) && d > best_score) {
          dir = -1;
          score = d;
        }
        if (dir != 0) {
          entering = j;
          direction = dir;
          if (bland) break;  // least-index rule
          best_score = score;
        }
      }
      if (entering < 0) {
        if (confirmed) return LpStatus::Optimal;
        if (!confirm()) return LpStatus::NumericalFailure;
        continue;
      }
      confirmed = false;
      const double entering_reduced =
          (phase1 ? 0.0 : cost_[entering]) - price(entering);

      ftran(entering, w);

      // Harris-style two-pass ratio test: pass 1 finds the tightest limit
      // with bounds relaxed by half a feasibility tolerance, pass 2 picks
      // the largest pivot among blockers within that limit.
      const double relax = 0.5 * tol_.feasibility;
      double own_span = kInfinity;
      if (std::isfinite(up_[entering]) && std::isfinite(lo_[entering]))
        own_span = up_[entering] - lo_[entering];
      auto blocking = [&](int r, double slack, bool& to_upper) {
        const double g = -direction * w[r];
        const int k = basic_[r];
        const double xv = value_[k];
        const bool below = phase1 && xv < lo_[k] - tol_.feasibility;
        const bool above = phase1 && xv > up_[k] + tol_.feasibility;
        if (g > tol_.pivot) {
          if (above) return kInfinity;  // moving further out has no breakpoint
          const double target = below ? lo_[k] : up_[k];
          to_upper = !below;
          if (!std::isfinite(target)) return kInfinity;
          return std::max((target + slack - xv) / g, 0.0);
        }
        if (g < -tol_.pivot) {
          if (below) return kInfinity;
          const double target = above ? up_[k] : lo_[k];
          to_upper = above;
          if (!std::isfinite(target)) return kInfinity;
          return std::max((target - slack - xv) / g, 0.0);
        }
        return kInfinity;
      };
      double theta_max = own_span;
      for (int r = 0; r < m_; ++r) {
        bool to_upper;
        theta_max = std::min(theta_max, blocking(r, relax, to_upper));
      }
      if (!std::isfinite(theta_max)) {
        if (phase1) return LpStatus::NumericalFailure;  // inconsistent data
        return LpStatus::Unbounded;
      }
      int leaving_row = -1;
      bool leaving_to_upper = false;
      double t_row = kInfinity;
      if (bland) {
        // full Bland: tightest strict ratio, least basic index on ties
        for (int r = 0; r < m_; ++r) {
          bool to_upper;
          const double strict = blocking(r, 0.0, to_upper);
          if (!std::isfinite(strict)) continue;
          if (strict < t_row - 1e-12 ||
              (strict < t_row + 1e-12 &&
               (leaving_row < 0 || basic_[r] < basic_[leaving_row]))) {
            t_row = strict;
            leaving_row = r;
            leaving_to_upper = to_upper;
          }
        }
      } else {
        double best_pivot = 0.0;
        for (int r = 0; r < m_; ++r) {
          bool to_upper;
          const double strict = blocking(r, 0.0, to_upper);
          if (strict > theta_max) continue;
          const double g = std::abs(w[r]);
          if (g > best_pivot + 1e-12 ||
              (g > best_pivot - 1e-12 && leaving_row >= 0 && basic_[r] < basic_[leaving_row])) {
            best_pivot = g;
            leaving_row = r;
            leaving_to_upper = to_upper;
            t_row = strict;
          }
        }
      }
      double t;
      if (leaving_row < 0 || own_span <= t_row) {
        leaving_row = -1;  // bound flip
        t = own_span;
      } else {
        t = t_row;
      }
      if (t != 0.0) {
        for (int r = 0; r < m_; ++r) {
          const double g = -direction * w[r];
          if (g != 0.0) value_[basic_[r]] += g * t;
        }
        value_[entering] += direction * t;
      }

      if (leaving_row < 0) {
        // entering flips to its other bound; duals unchanged
        status_[entering] =
            status_[entering] == VarStatus::AtLower ? VarStatus::AtUpper : VarStatus::AtLower;
        value_[entering] = status_[entering] == VarStatus::AtLower ? lo_[entering] : up_[entering];
      } else {
        const int leaving = basic_[leaving_row];
        status_[leaving] = leaving_to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
        value_[leaving] = leaving_to_upper ? up_[leaving] : lo_[leaving];
        status_[entering] = VarStatus::Basic;
        basic_[leaving_row] = entering;
        update_binv(leaving_row, w);
        // y' = y + d_q * (new row r of B^{-1})
        if (entering_reduced != 0.0)
          for (int k = 0; k < m_; ++k) y_[k] += entering_reduced * binv_[idx(leaving_row, k)];
        if (++pivots_since_refactor_ >= kRefactorInterval) {
          if (!refactor_or_reset(phase1)) return LpStatus::NumericalFailure;
        }
      }

      const double obj = phase_objective(phase1);
      if (obj < last_objective - 1e-12) {
        stall = 0;
        bland = force_bland_;
      } else if (++stall > 64) {
        bland = true;  // Bland's rule guarantees escape from cycling
      }
      last_objective = obj;
    }
  }

  double phase_objective(bool phase1) const {
    if (phase1) return total_infeasibility();
    double obj = 0.0;
    for (int j = 0; j < total_; ++j) obj += cost_[j] * value_[j];
    return obj;
  }

  // rank-1 update after replacing basic row r with the entering column,
  // whose ftran image is w
  void update_binv(int r, const std::vector<double>& w) {
    const double piv = w[r];
    for (int k = 0; k < m_; ++k) binv_[idx(r, k)] /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = w[i];
      if (f == 0.0) continue;
      for (int k = 0; k < m_; ++k) binv_[idx(i, k)] -= f * binv_[idx(r, k)];
    }
  }

  void export_basis(LpBasis* out) const {
    if (out == nullptr) return;
    out->status = status_;
  }

  std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * m_ + c; }

  const LpModel& model_;
  LpTolerances tol_;
  int n_ = 0, m_ = 0, total_ = 0;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> cost_, lo_, up_, value_, y_;
  std::vector<double> binv_;
  std::vector<int> basic_;
  std::vector<VarStatus> status_;
  int pivots_since_refactor_ = 0;
  int resets_ = 0;
  bool force_bland_ = false;
  int debug_ = getenv("STOCHPLAN_LP_DEBUG") ? atoi(getenv("STOCHPLAN_LP_DEBUG")) : 0;
  long long iterations_ = 0;
};

}  // namespace

LpSolution LpSolver::solve(const LpModel& model, const LpBasis* warm_start,
                           LpBasis* basis_out) {
  if (model.objective.size() != static_cast<std::size_t>(model.num_vars) ||
      model.lower.size() != static_cast<std::size_t>(model.num_vars) ||
      model.upper.size() != static_cast<std::size_t>(model.num_vars))
    throw std::invalid_argument("lp: inconsistent model dimensions");
  for (const LpRow& row : model.rows)
    for (auto [j, v] : row.coeffs) {
      (void)v;
      if (j < 0 || j >= model.num_vars)
        throw std::invalid_argument("lp: row references unknown column");
    }
  Simplex simplex(model, tol_);
  return simplex.run(warm_start, basis_out);
}

std::string to_text(const LpModel& model) {
  std::ostringstream out;
  out << (model.maximize ? "maximize" : "minimize") << '\n' << " obj:";
  for (int j = 0; j < model.num_vars; ++j)
    if (model.objective[j] != 0.0)
      out << (model.objective[j] >= 0 ? " +" : " ") << model.objective[j] << " x" << j;
  out << "\nsubject to\n";
  for (int r = 0; r < model.num_rows(); ++r) {
    const LpRow& row = model.rows[r];
    out << " r" << r << ":";
    for (auto [j, v] : row.coeffs) out << (v >= 0 ? " +" : " ") << v << " x" << j;
    out << (row.sense == 'L' ? " <= " : row.sense == 'G' ? " >= " : " = ") << row.rhs << '\n';
  }
  out << "bounds\n";
  for (int j = 0; j < model.num_vars; ++j)
    out << ' ' << model.lower[j] << " <= x" << j << " <= " << model.upper[j] << '\n';
  out << "end\n";
  return out.str();
}

}  // namespace stochplan
