#pragma once

#include <vector>

#include "alloctime/dynamics.hpp"
#include "alloctime/model.hpp"

namespace alloctime {

/// Budget as a fraction b = B/N of the initial pool.
struct BudgetSpec {
  double fraction = 0.1;
  explicit BudgetSpec(double b);
  static BudgetSpec from_counts(double B, double N);
  /// ln(N/B).
  double log_inverse() const;
};

struct OneTimeResult {
  int t = 1;
  double welfare_per_capita = 0.0;
  /// Lowest y^t that receives any treatment.
  int threshold_k = 0;
  /// Share of the threshold cohort treated.
  double partial_fraction = 1.0;
  double treated_mass = 0.0;
  double active_mass = 0.0;
};

/// Spends the budget at t on the highest-y cohorts of the untreated
/// population. Needs dynamics built with a utility.
OneTimeResult one_time_welfare(const CohortDynamics& dyn, BudgetSpec budget, int t);
OneTimeResult one_time_welfare(const Prior& prior, const ObservationModel& model,
                               const UtilityFunction& utility, BudgetSpec budget, int t,
                               Convention convention = Convention::appendix_c);

struct OneTimeSweep {
  int t_opt = 1;
  std::vector<OneTimeResult> curve;  // t = 1..T
};

/// Welfare for every t; t_opt is the earliest maximizer.
OneTimeSweep best_one_time(const CohortDynamics& dyn, BudgetSpec budget,
                           Exec exec = Exec::parallel);
OneTimeSweep best_one_time(const Prior& prior, const ObservationModel& model,
                           const UtilityFunction& utility, BudgetSpec budget,
                           Convention convention = Convention::appendix_c);

struct TStar {
  double value = 0.0;
  /// value > T: the bound says nothing on this horizon.
  bool vacuous = false;
};

/// Latest time at which one-time allocation with a fully effective
/// treatment can still be optimal. Requires gamma > 1.
TStar t_star_fully_effective(int T, double G, double gamma, BudgetSpec budget);

struct DeferralCheck {
  double warmup_t_star = 0.0;
  bool in_warmup = false;
  /// (u^{t+1})'(0) against the decay-dependent threshold.
  double lhs = 0.0;
  double rhs = 0.0;
  /// True when waiting past t is not ruled out.
  bool condition_holds = true;
};

/// Necessary condition for welfare to improve after t, for any decaying
/// utility. Requires gamma > 1 and 1 <= t < T.
DeferralCheck general_deferral_condition(int t, int T, double gamma, double G,
                                         const UtilityFunction& utility, BudgetSpec budget);

/// Sign of (G+1)(T-4) - 6: whether the y = 2 cohort at t = 2 is worth more
/// than the y = 1 cohort at t = 1 under Beta(1, G+1), gamma = 1 and a fully
/// effective treatment.
int appendix_c_sign(double G, int T);
/// U_2^2 - U_1^1 for the same instance by quadrature.
double appendix_c_difference(double G, int T);

/// Upper bound (gamma+1) ln(1/b) on the threshold y under a non-increasing
/// prior.
double l_t_upper_bound(double gamma, BudgetSpec budget);

}  // namespace alloctime
