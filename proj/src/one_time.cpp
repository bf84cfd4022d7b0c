#include "alloctime/one_time.hpp"

#include <cmath>

namespace alloctime {

BudgetSpec::BudgetSpec(double b) : fraction(b) {
  if (!(b > 0.0 && b <= 1.0)) throw DomainError("budget fraction must lie in (0,1]");
}

BudgetSpec BudgetSpec::from_counts(double B, double N) {
  if (!(N > 0.0)) throw DomainError("population size must be positive");
  return BudgetSpec(B / N);
}

double BudgetSpec::log_inverse() const { return -std::log(fraction); }

OneTimeResult one_time_welfare(const CohortDynamics& dyn, BudgetSpec budget, int t) {
  if (t < 1 || t > dyn.horizon()) throw DomainError("time step outside [1, T]");
  const auto& table = dyn.untreated(t);
  OneTimeResult r;
  r.t = t;
  r.active_mass = table.total();
  if (budget.fraction >= r.active_mass) {
    for (int k = 0; k <= t; ++k) r.welfare_per_capita += table.masses[k] * dyn.value(t, k);
    r.treated_mass = r.active_mass;
    r.threshold_k = 0;
    r.partial_fraction = 1.0;
    return r;
  }
  double left = budget.fraction;
  for (int k = t; k >= 0; --k) {
    const double m = table.masses[k];
    if (m <= 0.0) continue;
    r.threshold_k = k;
    if (left >= m) {
      r.welfare_per_capita += m * dyn.value(t, k);
      r.treated_mass += m;
      left -= m;
      r.partial_fraction = 1.0;
      if (left <= 0.0) break;
    } else {
      r.partial_fraction = left / m;
      r.welfare_per_capita += left * dyn.value(t, k);
      r.treated_mass += left;
      break;
    }
  }
  return r;
}

OneTimeResult one_time_welfare(const Prior& prior, const ObservationModel& model,
                               const UtilityFunction& utility, BudgetSpec budget, int t,
                               Convention convention) {
  CohortDynamics dyn(prior, model, utility.horizon(), convention, utility);
  return one_time_welfare(dyn, budget, t);
}

OneTimeSweep best_one_time(const CohortDynamics& dyn, BudgetSpec budget, Exec exec) {
  const int T = dyn.horizon();
  OneTimeSweep sweep;
  sweep.curve.resize(T);
  if (exec == Exec::parallel) {
#pragma omp parallel for
    for (int t = 1; t <= T; ++t) sweep.curve[t - 1] = one_time_welfare(dyn, budget, t);
  } else {
    for (int t = 1; t <= T; ++t) sweep.curve[t - 1] = one_time_welfare(dyn, budget, t);
  }
  double best = -INFINITY;
  for (const auto& r : sweep.curve) {
    if (r.welfare_per_capita > best) {
      best = r.welfare_per_capita;
      sweep.t_opt = r.t;
    }
  }
  return sweep;
}

OneTimeSweep best_one_time(const Prior& prior, const ObservationModel& model,
                           const UtilityFunction& utility, BudgetSpec budget,
                           Convention convention) {
  CohortDynamics dyn(prior, model, utility.horizon(), convention, utility);
  return best_one_time(dyn, budget);
}

TStar t_star_fully_effective(int T, double G, double gamma, BudgetSpec budget) {
  if (!(gamma > 1.0)) throw DomainError("bound requires γ > 1");
  if (!(G >= 0.0)) throw DomainError("G must be non-negative");
  const double slope = G / 4.0 + (gamma + 1.0 / gamma) / 4.0 + 1.0;
  TStar s;
  s.value = T / 2.0 + slope * ((gamma + 1.0) * budget.log_inverse() + 1.0);
  s.vacuous = s.value > T;
  return s;
}

namespace {

// (u^{t+1})'(0) for the built-in kinds.
double slope_at_zero(const UtilityFunction& u, int t) {
  const double m = u.horizon() - t - 1;
  switch (u.kind()) {
    case UtilityKind::FullyEffective: return m;
    case UtilityKind::RiskyProcedure:
    case UtilityKind::PartialSuccess: return u.param() * m;
    case UtilityKind::RiskReduction: return m * (1.0 - 1.0 / u.param());
  }
  throw DomainError("unknown utility constants");
}

}  // namespace

DeferralCheck general_deferral_condition(int t, int T, double gamma, double G,
                                         const UtilityFunction& utility, BudgetSpec budget) {
  if (!(gamma > 1.0)) throw DomainError("bound requires γ > 1");
  if (utility.horizon() != T) throw DomainError("utility horizon does not match T");
  if (t < 1 || t >= T) throw DomainError("need 1 <= t < T");
  DeferralCheck c;
  c.warmup_t_star = (gamma + 1.0) * budget.log_inverse();
  const double ts = c.warmup_t_star;
  c.in_warmup = t < ts;
  c.lhs = slope_at_zero(utility, t);
  const auto lam = utility.decaying_constants(t);
  if (lam.has_lambda2() && lam.lambda1 >= lam.lambda2) {
    const double denom = 1.0 + (2.0 + gamma + 1.0 / gamma + G) * (ts + 1.0) / (2.0 * t - ts + 1.0);
    c.rhs = (lam.lambda1 / lam.lambda2) * (t - ts) / denom;
  } else {
    c.rhs = lam.lambda1 * (t - ts) / (ts + 1.0);
  }
  c.condition_holds = c.in_warmup || c.lhs >= c.rhs;
  return c;
}

int appendix_c_sign(double G, int T) {
  if (T < 2) throw DomainError("horizon must be at least 2");
  if (!(G >= 0.0)) throw DomainError("G must be non-negative");
  const double v = (G + 1.0) * (T - 4.0) - 6.0;
  return (v > 0.0) - (v < 0.0);
}

double appendix_c_difference(double G, int T) {
  if (T < 2) throw DomainError("horizon must be at least 2");
  const auto u = UtilityFunction::fully_effective(T);
  CohortDynamics dyn(Prior::beta(1.0, G + 1.0), ObservationModel(1.0), T, Convention::appendix_c,
                     u, Exec::serial);
  return dyn.value(2, 2) - dyn.value(1, 1);
}

double l_t_upper_bound(double gamma, BudgetSpec budget) {
  if (!(gamma >= 1.0)) throw DomainError("gamma must be at least 1");
  return (gamma + 1.0) * budget.log_inverse();
}

}  // namespace alloctime
