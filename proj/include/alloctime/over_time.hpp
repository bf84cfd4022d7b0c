#pragma once

#include <vector>

#include "alloctime/dynamics.hpp"
#include "alloctime/one_time.hpp"
#include "alloctime/parallel.hpp"

namespace alloctime {

/// Treat everyone with y^t >= q(t) at each t, except that a share rho of
/// cohort q(t_hat) at t_hat is left untreated. q[t-1] holds q(t);
/// q(t) >= t+1 treats nobody.
struct PolicySchedule {
  int t_hat = 1;
  std::vector<int> q;
  double rho = 0.0;
};

struct ScheduleOutcome {
  double expenditure = 0.0;
  double utility_per_capita = 0.0;
  std::vector<CohortTable> cohort_trace;  // pre-treatment tables, t = 1..T
  std::vector<double> treated_mass;       // per t
};

struct ScheduleCandidate {
  int t_hat = 1;
  std::vector<int> q;
};

/// All 3 T 2^{T-1} candidates: q(1) in {0,1,2}; after t_hat the threshold
/// rises by 1 or 2, elsewhere by 0 or 1.
std::vector<ScheduleCandidate> enumerate_schedules(int T);
std::size_t schedule_count(int T);

/// Expenditure and utility of a candidate as affine functions of rho.
struct ScheduleLine {
  double e_max = 0.0;     // expenditure at rho = 0
  double delta_e = 0.0;   // expenditure(rho) = e_max - rho * delta_e
  double u0 = 0.0;        // utility at rho = 0
  double delta_u = 0.0;   // utility(rho) = u0 + rho * delta_u
  double expenditure(double rho) const { return e_max - rho * delta_e; }
  double utility(double rho) const { return u0 + rho * delta_u; }
};

/// Builds the line from two runs: the schedule with the threshold cohort
/// fully treated, and the forward effect of leaving it untreated.
ScheduleLine schedule_line(const CohortDynamics& dyn, int t_hat, const std::vector<int>& q);

/// Direct forward simulation of a schedule (independent of schedule_line).
ScheduleOutcome evaluate_schedule(const CohortDynamics& dyn, const PolicySchedule& schedule);

/// Checks the threshold pattern: q(1) in {0,1,2}, non-decreasing, steps
/// of 0/1 except 1/2 right after t_hat, rho in [0,1].
bool verify_structure(const PolicySchedule& schedule);

struct OverTimeSolution {
  PolicySchedule schedule;
  ScheduleOutcome outcome;
  /// False when no schedule can spend the budget; the schedule is then
  /// the one with the largest expenditure.
  bool budget_exhausted = true;
  std::size_t candidates = 0;
  std::size_t feasible = 0;
};

/// Best schedule whose expenditure equals the budget.
OverTimeSolution solve_optimal(const CohortDynamics& dyn, BudgetSpec budget,
                               Exec exec = Exec::parallel);

/// Treated-mass-weighted mean of t.
double mean_treatment_time(const ScheduleOutcome& outcome);

}  // namespace alloctime
