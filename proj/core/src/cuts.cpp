#include "stochplan/cuts.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "stochplan/drivers.hpp"

namespace stochplan {

const char* to_string(CutOrigin origin) {
  switch (origin) {
    case CutOrigin::Nogood: return "nogood";
    case CutOrigin::StrengthenedNogood: return "strengthened-nogood";
    case CutOrigin::AnalyticLinearized: return "analytic-linearized";
    case CutOrigin::AnalyticWeak: return "analytic-weak";
    case CutOrigin::IntegerLShaped: return "integer-lshaped";
    case CutOrigin::ClassicalLP: return "classical-lp";
    case CutOrigin::Relaxation: return "relaxation";
    case CutOrigin::InitialBound: return "initial-bound";
  }
  return "?";
}

double cut_slack(const Cut& cut, const std::function<double(const VarRef&)>& value_of) {
  double activity = 0.0;
  for (const auto& [ref, coef] : cut.coeffs) activity += coef * value_of(ref);
  return activity - cut.rhs;
}

std::string to_text(const Cut& cut) {
  std::ostringstream out;
  out << to_string(cut.origin) << " (i=" << cut.facility << ", w=" << cut.scenario << "):";
  for (const auto& [ref, coef] : cut.coeffs) {
    out << (coef >= 0 ? " +" : " ") << coef << "*";
    switch (ref.kind) {
      case VarKind::X: out << "x[" << ref.facility << "," << ref.task << "]"; break;
      case VarKind::BetaScenario: out << "beta[" << ref.scenario << "]"; break;
      case VarKind::BetaFacility:
        out << "beta[" << ref.facility << "," << ref.scenario << "]";
        break;
      case VarKind::ZAux: out << "z[" << ref.facility << "," << ref.scenario << "]"; break;
      case VarKind::BetaMax: out << "beta_max"; break;
    }
  }
  out << " >= " << cut.rhs;
  return out.str();
}

std::optional<Cut> nogood_cut(const SubproblemValue& sp) {
  if (sp.jobs.empty()) return std::nullopt;
  Cut cut;
  cut.origin = CutOrigin::Nogood;
  cut.facility = sp.facility;
  cut.scenario = sp.scenario;
  cut.coeffs.emplace_back(VarRef::beta_fac(sp.facility, sp.scenario), 1.0);
  for (int j : sp.jobs) cut.coeffs.emplace_back(VarRef::x(sp.facility, j), -sp.value);
  cut.rhs = sp.value * (1.0 - static_cast<double>(sp.jobs.size()));
  return cut;
}

SubproblemValue strengthen_nogood(
    const SubproblemValue& sp,
    const std::function<double(const std::vector<int>&)>& resolve, int budget) {
  SubproblemValue current = sp;
  for (std::size_t pos = 0; pos < current.jobs.size() && current.jobs.size() > 1;) {
    if (budget <= 0) break;
    std::vector<int> reduced = current.jobs;
    reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(pos));
    --budget;
    const double value = resolve(reduced);
    if (value >= current.value - 1e-9) {
      current.jobs = std::move(reduced);  // same value without this job
    } else {
      ++pos;
    }
  }
  return current;
}

std::vector<Cut> analytic_cut_linearized(const SubproblemValue& sp,
                                         const std::vector<int>& processing_row,
                                         int r_plus, int r_minus) {
  std::vector<Cut> cuts;
  if (sp.jobs.empty()) return cuts;
  const double spread = r_plus - r_minus;
  double processing_sum = 0.0;

  Cut main;
  main.origin = CutOrigin::AnalyticLinearized;
  main.facility = sp.facility;
  main.scenario = sp.scenario;
  main.coeffs.emplace_back(VarRef::beta_fac(sp.facility, sp.scenario), 1.0);
  main.coeffs.emplace_back(VarRef::z_aux(sp.facility, sp.scenario), 1.0);
  for (int j : sp.jobs) {
    const double p = processing_row[j];
    main.coeffs.emplace_back(VarRef::x(sp.facility, j), -p);
    processing_sum += p;
  }
  main.rhs = sp.value - processing_sum;
  cuts.push_back(std::move(main));

  Cut budgeted;  // z <= spread * sum (1 - x)
  budgeted.origin = CutOrigin::AnalyticLinearized;
  budgeted.facility = sp.facility;
  budgeted.scenario = sp.scenario;
  budgeted.coeffs.emplace_back(VarRef::z_aux(sp.facility, sp.scenario), -1.0);
  for (int j : sp.jobs) budgeted.coeffs.emplace_back(VarRef::x(sp.facility, j), -spread);
  budgeted.rhs = -spread * static_cast<double>(sp.jobs.size());
  cuts.push_back(std::move(budgeted));

  Cut capped;  // z <= spread
  capped.origin = CutOrigin::AnalyticLinearized;
  capped.facility = sp.facility;
  capped.scenario = sp.scenario;
  capped.coeffs.emplace_back(VarRef::z_aux(sp.facility, sp.scenario), -1.0);
  capped.rhs = -spread;
  cuts.push_back(std::move(capped));
  return cuts;
}

std::optional<Cut> analytic_cut_weak(const SubproblemValue& sp,
                                     const std::vector<int>& processing_row, int r_plus,
                                     int r_minus) {
  if (sp.jobs.empty()) return std::nullopt;
  const double share = static_cast<double>(r_plus - r_minus) / sp.jobs.size();
  Cut cut;
  cut.origin = CutOrigin::AnalyticWeak;
  cut.facility = sp.facility;
  cut.scenario = sp.scenario;
  cut.coeffs.emplace_back(VarRef::beta_fac(sp.facility, sp.scenario), 1.0);
  double processing_sum = 0.0;
  for (int j : sp.jobs) {
    const double p = processing_row[j];
    cut.coeffs.emplace_back(VarRef::x(sp.facility, j), -(p + share));
    processing_sum += p;
  }
  cut.rhs = sp.value - processing_sum - static_cast<double>(r_plus - r_minus);
  return cut;
}

Cut integer_lshaped_cut(const SubproblemValue& sp, int num_tasks, double global_lb) {
  Cut cut;
  cut.origin = CutOrigin::IntegerLShaped;
  cut.facility = sp.facility;
  cut.scenario = sp.scenario;
  const double height = sp.value - global_lb;
  cut.coeffs.emplace_back(VarRef::beta_fac(sp.facility, sp.scenario), 1.0);
  std::set<int> assigned(sp.jobs.begin(), sp.jobs.end());
  for (int j = 0; j < num_tasks; ++j) {
    const double sign = assigned.count(j) ? -1.0 : 1.0;
    cut.coeffs.emplace_back(VarRef::x(sp.facility, j), sign * height);
  }
  cut.rhs = height * (1.0 - static_cast<double>(sp.jobs.size())) + global_lb;
  return cut;
}

Cut classical_lp_cut(int facility, int scenario, double lp_value,
                     const std::vector<std::pair<int, double>>& job_duals) {
  Cut cut;
  cut.origin = CutOrigin::ClassicalLP;
  cut.facility = facility;
  cut.scenario = scenario;
  cut.coeffs.emplace_back(VarRef::beta_fac(facility, scenario), 1.0);
  double dual_sum = 0.0;
  for (auto [j, nu] : job_duals) {
    cut.coeffs.emplace_back(VarRef::x(facility, j), -nu);
    dual_sum += nu;
  }
  cut.rhs = lp_value - dual_sum;
  return cut;
}

std::vector<Cut> makespan_relaxation(const Instance& instance) {
  std::vector<Cut> cuts;
  for (int i = 0; i < instance.num_facilities; ++i)
    for (int w = 0; w < instance.num_scenarios(); ++w) {
      Cut cut;
      cut.origin = CutOrigin::Relaxation;
      cut.facility = i;
      cut.scenario = w;
      cut.coeffs.emplace_back(VarRef::beta_fac(i, w), 1.0);
      for (int j = 0; j < instance.num_tasks; ++j) {
        const double energy = static_cast<double>(instance.consumption[i][j]) *
                              instance.scenarios[w].processing[i][j] / instance.capacity[i];
        cut.coeffs.emplace_back(VarRef::x(i, j), -energy);
      }
      cut.rhs = 0.0;
      cuts.push_back(std::move(cut));
    }
  return cuts;
}

Cut cost_feasibility_cut(const SubproblemValue& infeasible_sp) {
  Cut cut;
  cut.origin = CutOrigin::Nogood;
  cut.facility = infeasible_sp.facility;
  cut.scenario = infeasible_sp.scenario;
  for (int j : infeasible_sp.jobs)
    cut.coeffs.emplace_back(VarRef::x(infeasible_sp.facility, j), -1.0);
  cut.rhs = 1.0 - static_cast<double>(infeasible_sp.jobs.size());
  return cut;
}

std::vector<Cut> cost_relaxation(const Instance& instance) {
  std::vector<Cut> cuts;
  std::vector<int> releases = instance.release;
  std::sort(releases.begin(), releases.end());
  releases.erase(std::unique(releases.begin(), releases.end()), releases.end());
  std::vector<int> deadlines;
  for (int d : instance.deadline)
    if (d != kNoDeadline) deadlines.push_back(d);
  std::sort(deadlines.begin(), deadlines.end());
  deadlines.erase(std::unique(deadlines.begin(), deadlines.end()), deadlines.end());

  for (int i = 0; i < instance.num_facilities; ++i) {
    for (int t1 : releases) {
      for (int t2 : deadlines) {
        if (t1 >= t2) continue;  // redundant pair
        Cut cut;
        cut.origin = CutOrigin::Relaxation;
        cut.facility = i;
        bool any = false;
        for (int j = 0; j < instance.num_tasks; ++j) {
          if (instance.release[j] < t1) continue;
          if (instance.deadline[j] == kNoDeadline || instance.deadline[j] > t2) continue;
          int p_min = instance.scenarios[0].processing[i][j];
          for (const Scenario& sc : instance.scenarios)
            p_min = std::min(p_min, sc.processing[i][j]);
          const double energy =
              static_cast<double>(p_min) * instance.consumption[i][j] / instance.capacity[i];
          cut.coeffs.emplace_back(VarRef::x(i, j), -energy);
          any = true;
        }
        if (!any) continue;
        cut.rhs = -static_cast<double>(t2 - t1);
        cuts.push_back(std::move(cut));
      }
    }
  }
  return cuts;
}

Cut tardiness_cut(const Instance& instance, int scenario,
                  const std::vector<SubproblemValue>& per_facility) {
  const std::vector<int>& due = *instance.due_date;
  Cut cut;
  cut.origin = CutOrigin::AnalyticWeak;
  cut.scenario = scenario;
  cut.coeffs.emplace_back(VarRef::beta(scenario), 1.0);
  double rhs = 0.0;
  for (const SubproblemValue& sp : per_facility) {
    rhs += sp.value;
    double load = 0.0;  // total processing of the facility's job set
    for (int j : sp.jobs) load += instance.scenarios[scenario].processing[sp.facility][j];
    for (int j : sp.jobs) {
      const double weight = std::max(0.0, load - due[j]);
      if (weight == 0.0) continue;
      cut.coeffs.emplace_back(VarRef::x(sp.facility, j), -weight);
      rhs -= weight;
    }
  }
  cut.rhs = rhs;
  return cut;
}

std::vector<Cut> tardiness_relaxations(const Instance& instance) {
  const std::vector<int>& due = *instance.due_date;
  const int n = instance.num_tasks;
  std::vector<Cut> cuts;
  for (int i = 0; i < instance.num_facilities; ++i) {
    std::vector<int> p_min(n);
    for (int j = 0; j < n; ++j) {
      p_min[j] = instance.scenarios[0].processing[i][j];
      for (const Scenario& sc : instance.scenarios) p_min[j] = std::min(p_min[j], sc.processing[i][j]);
    }
    for (int w = 0; w < instance.num_scenarios(); ++w) {
      const auto& p = instance.scenarios[w].processing[i];
      for (int j = 0; j < n; ++j) {
        // energy of everything due at or before task j, against its due date
        Cut simple;
        simple.origin = CutOrigin::Relaxation;
        simple.facility = i;
        simple.scenario = w;
        simple.coeffs.emplace_back(VarRef::beta_fac(i, w), 1.0);
        for (int k = 0; k < n; ++k) {
          if (due[k] > due[j]) continue;
          const double energy =
              static_cast<double>(p_min[k]) * instance.consumption[i][k] / instance.capacity[i];
          simple.coeffs.emplace_back(VarRef::x(i, k), -energy);
        }
        simple.rhs = -static_cast<double>(due[j]);
        cuts.push_back(std::move(simple));

        // scenario-exact energies over the same prefix, switched off by a
        // big-M term unless task j itself sits on the facility
        double prefix_energy = 0.0;
        Cut sorted;
        sorted.origin = CutOrigin::Relaxation;
        sorted.facility = i;
        sorted.scenario = w;
        sorted.coeffs.emplace_back(VarRef::beta_fac(i, w), 1.0);
        for (int k = 0; k < n; ++k) {
          if (due[k] > due[j]) continue;
          const double energy =
              static_cast<double>(p[k]) * instance.consumption[i][k] / instance.capacity[i];
          prefix_energy += energy;
          sorted.coeffs.emplace_back(VarRef::x(i, k), -energy);
        }
        const double big_m = prefix_energy - due[j];
        // beta >= sum e x - due_j - (1 - x_ij) M  <=>  beta - sum e x - M x_ij >= -due_j - M
        for (auto& [ref, coef] : sorted.coeffs)
          if (ref == VarRef::x(i, j)) coef -= big_m;
        sorted.rhs = -static_cast<double>(due[j]) - big_m;
        cuts.push_back(std::move(sorted));
      }
    }
  }
  return cuts;
}

std::vector<Cut> initial_scenario_bounds(const Instance& instance) {
  std::vector<Cut> cuts;
  for (int w = 0; w < instance.num_scenarios(); ++w) {
    Cut cut;
    cut.origin = CutOrigin::InitialBound;
    cut.scenario = w;
    cut.coeffs.emplace_back(VarRef::beta(w), 1.0);
    cut.rhs = scenario_lp_bound(instance, w);
    cuts.push_back(std::move(cut));
  }
  return cuts;
}

}  // namespace stochplan
