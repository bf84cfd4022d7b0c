#include "alloctime/over_time.hpp"

#include <algorithm>
#include <cmath>

namespace alloctime {

namespace {

constexpr double kRhoSlack = 1e-12;
constexpr double kTieTolerance = 1e-12;

void check_schedule_shape(int T, int t_hat, const std::vector<int>& q) {
  if (static_cast<int>(q.size()) != T) throw DomainError("invalid schedule shape: q needs T entries");
  if (t_hat < 1 || t_hat > T) throw DomainError("invalid schedule shape: t_hat outside [1, T]");
  for (int i = 0; i < T; ++i) {
    if (q[i] < 0) throw DomainError("invalid schedule shape: negative threshold");
    if (i > 0 && q[i] < q[i - 1]) throw DomainError("invalid schedule shape: q must be non-decreasing");
  }
}

double threshold_mass(const CohortTable& table, int q) {
  double s = 0.0;
  for (int k = std::max(q, 0); k < static_cast<int>(table.masses.size()); ++k) s += table.masses[k];
  return s;
}

double threshold_value(const CohortDynamics& dyn, const CohortTable& table, int q) {
  double s = 0.0;
  for (int k = std::max(q, 0); k < static_cast<int>(table.masses.size()); ++k) {
    if (table.masses[k] != 0.0) s += table.masses[k] * dyn.value(table.t, k);
  }
  return s;
}

// Forward step of untreated masses, cohorts k >= q(t) removed.
CohortTable step(const CohortDynamics& dyn, const CohortTable& cur, int q) {
  CohortTable next;
  next.t = cur.t + 1;
  next.masses.assign(cur.t + 2, 0.0);
  const int top = std::min(q, static_cast<int>(cur.masses.size()));
  for (int k = 0; k < top; ++k) {
    const double m = cur.masses[k];
    if (m == 0.0) continue;
    next.masses[k] += m * dyn.stay(cur.t, k);
    next.masses[k + 1] += m * dyn.up(cur.t, k);
  }
  return next;
}

// Lexicographic q comparison.
int compare_q(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

}  // namespace

std::size_t schedule_count(int T) {
  if (T < 1) throw DomainError("horizon must be at least 1");
  return 3u * static_cast<std::size_t>(T) * (std::size_t{1} << (T - 1));
}

std::vector<ScheduleCandidate> enumerate_schedules(int T) {
  std::vector<ScheduleCandidate> out;
  out.reserve(schedule_count(T));
  const std::size_t patterns = std::size_t{1} << (T - 1);
  for (int t_hat = 1; t_hat <= T; ++t_hat) {
    for (int q1 = 0; q1 <= 2; ++q1) {
      for (std::size_t bits = 0; bits < patterns; ++bits) {
        ScheduleCandidate c;
        c.t_hat = t_hat;
        c.q.resize(T);
        c.q[0] = q1;
        for (int t = 1; t < T; ++t) {
          const int bit = static_cast<int>((bits >> (t - 1)) & 1u);
          // Step from q(t) to q(t+1); position t is the step after time t.
          c.q[t] = c.q[t - 1] + bit + (t == t_hat ? 1 : 0);
        }
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

ScheduleLine schedule_line(const CohortDynamics& dyn, int t_hat, const std::vector<int>& q) {
  const int T = dyn.horizon();
  check_schedule_shape(T, t_hat, q);
  ScheduleLine line;
  CohortTable a = dyn.untreated(1);
  CohortTable d;  // effect of leaving cohort q(t_hat) untreated
  for (int t = 1; t <= T; ++t) {
    const int qt = q[t - 1];
    line.e_max += threshold_mass(a, qt);
    line.u0 += threshold_value(dyn, a, qt);
    if (t == t_hat) {
      const double m = qt <= t ? a.masses[qt] : 0.0;
      line.delta_e += m;
      if (m != 0.0) line.delta_u -= m * dyn.value(t, qt);
      d.t = t;
      d.masses.assign(t + 1, 0.0);
      if (qt <= t) d.masses[qt] = m;
    } else if (t > t_hat) {
      line.delta_e -= threshold_mass(d, qt);
      line.delta_u += threshold_value(dyn, d, qt);
    }
    if (t == T) break;
    a = step(dyn, a, qt);
    if (t == t_hat) {
      d = step(dyn, d, qt + 1);
    } else if (t > t_hat) {
      d = step(dyn, d, qt);
    }
  }
  return line;
}

ScheduleOutcome evaluate_schedule(const CohortDynamics& dyn, const PolicySchedule& s) {
  const int T = dyn.horizon();
  check_schedule_shape(T, s.t_hat, s.q);
  if (!(s.rho >= 0.0 && s.rho <= 1.0)) throw DomainError("invalid schedule shape: rho outside [0,1]");
  auto frac = [&](int t, int k) {
    const int qt = s.q[t - 1];
    if (k > qt) return 1.0;
    if (k == qt) return t == s.t_hat ? 1.0 - s.rho : 1.0;
    return 0.0;
  };
  const auto traj = simulate_fractional(dyn, 1, dyn.untreated(1), frac);
  ScheduleOutcome out;
  out.cohort_trace = traj.tables;
  out.treated_mass = traj.treated_mass;
  for (const auto& table : traj.tables) {
    for (int k = 0; k <= table.t; ++k) {
      const double x = frac(table.t, k) * table.masses[k];
      if (x == 0.0) continue;
      out.expenditure += x;
      out.utility_per_capita += x * dyn.value(table.t, k);
    }
  }
  return out;
}

bool verify_structure(const PolicySchedule& s) {
  const int T = static_cast<int>(s.q.size());
  if (T < 1 || s.t_hat < 1 || s.t_hat > T) return false;
  if (!(s.rho >= 0.0 && s.rho <= 1.0)) return false;
  if (s.q[0] < 0 || s.q[0] > 2) return false;
  for (int t = 1; t < T; ++t) {
    const int inc = s.q[t] - s.q[t - 1];
    if (t == s.t_hat) {
      if (inc != 1 && inc != 2) return false;
    } else if (inc != 0 && inc != 1) {
      return false;
    }
  }
  return true;
}

OverTimeSolution solve_optimal(const CohortDynamics& dyn, BudgetSpec budget, Exec exec) {
  if (!dyn.has_utility()) throw DomainError("dynamics were built without a utility");
  const int T = dyn.horizon();
  const auto candidates = enumerate_schedules(T);
  const long n = static_cast<long>(candidates.size());
  const double b = budget.fraction;

  struct Scored {
    bool feasible = false;
    double rho = 0.0;
    double utility = 0.0;
    double e_max = 0.0;
    double u0 = 0.0;
  };
  std::vector<Scored> scored(n);
  auto score = [&](long i) {
    const auto& c = candidates[i];
    const auto line = schedule_line(dyn, c.t_hat, c.q);
    Scored s;
    s.e_max = line.e_max;
    s.u0 = line.u0;
    if (std::abs(line.delta_e) <= 1e-15) {
      if (std::abs(line.e_max - b) <= kRhoSlack) {
        s.feasible = true;
        s.rho = 0.0;
      }
    } else {
      double rho = (line.e_max - b) / line.delta_e;
      if (rho >= -kRhoSlack && rho <= 1.0 + kRhoSlack) {
        s.feasible = true;
        s.rho = std::clamp(rho, 0.0, 1.0);
      }
    }
    if (s.feasible) s.utility = line.utility(s.rho);
    scored[i] = s;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) score(i);
  } else {
    for (long i = 0; i < n; ++i) score(i);
  }

  // Serial reduction under a total order: utility, then smaller t_hat,
  // lexicographically smaller q, smaller rho.
  auto prefer = [&](long i, double ui, double rhoi, long j, double uj, double rhoj) {
    const double tol = kTieTolerance * std::max(1.0, std::abs(uj));
    if (ui > uj + tol) return true;
    if (ui < uj - tol) return false;
    const auto& a = candidates[i];
    const auto& c = candidates[j];
    if (a.t_hat != c.t_hat) return a.t_hat < c.t_hat;
    const int cmp = compare_q(a.q, c.q);
    if (cmp != 0) return cmp < 0;
    return rhoi < rhoj;
  };

  OverTimeSolution sol;
  sol.candidates = candidates.size();
  long best = -1;
  for (long i = 0; i < n; ++i) {
    if (!scored[i].feasible) continue;
    ++sol.feasible;
    if (best < 0 ||
        prefer(i, scored[i].utility, scored[i].rho, best, scored[best].utility, scored[best].rho)) {
      best = i;
    }
  }
  if (best < 0) {
    // Nothing reaches the budget: take the largest spend at rho = 0.
    sol.budget_exhausted = false;
    for (long i = 0; i < n; ++i) {
      if (best < 0) {
        best = i;
        continue;
      }
      const double ei = scored[i].e_max, eb = scored[best].e_max;
      const double tol = kTieTolerance * std::max(1.0, eb);
      if (ei > eb + tol ||
          (ei >= eb - tol && prefer(i, scored[i].u0, 0.0, best, scored[best].u0, 0.0))) {
        best = i;
      }
    }
    scored[best].rho = 0.0;
  }
  sol.schedule.t_hat = candidates[best].t_hat;
  sol.schedule.q = candidates[best].q;
  sol.schedule.rho = scored[best].rho;
  sol.outcome = evaluate_schedule(dyn, sol.schedule);
  return sol;
}

double mean_treatment_time(const ScheduleOutcome& outcome) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < outcome.treated_mass.size(); ++i) {
    num += static_cast<double>(outcome.cohort_trace[i].t) * outcome.treated_mass[i];
    den += outcome.treated_mass[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace alloctime
