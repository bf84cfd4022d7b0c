#pragma once

#include <cstdint>
#include <vector>

#include "alloctime/dynamics.hpp"
#include "alloctime/one_time.hpp"
#include "alloctime/over_time.hpp"

namespace alloctime {

struct OracleConfig {
  int budget_units = 100;
  int T = 3;
  std::uint64_t seed = 1;
  void validate() const;
};

struct BruteForceResult {
  double utility_per_capita = 0.0;
  /// Budget units assigned to each t.
  std::vector<int> split;
  double spent = 0.0;
  std::size_t rollouts = 0;
};

/// Tries every split of the budget into budget_units equal parts over the
/// T steps. Each step spends its share on the highest y first; spending
/// beyond the untreated mass is dropped.
BruteForceResult brute_force_over_time(const CohortDynamics& dyn, BudgetSpec budget,
                                       const OracleConfig& cfg, Exec exec = Exec::parallel);

struct MCValue {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> replicates;
};

/// Finite-N realized utility per capita of a schedule, with the budget
/// capped at floor(N b).
MCValue mc_policy_value(const PolicySchedule& policy, const Prior& prior,
                        const ObservationModel& model, const UtilityFunction& utility,
                        BudgetSpec budget, std::size_t N, int reps, std::uint64_t seed,
                        Convention convention = Convention::appendix_c);

struct BayesRankingReport {
  bool y_rule_optimal = false;
  std::size_t rules = 0;
  double min_risk = 0.0;
  double y_rule_risk_strict = 0.0;  // ties predicted as p_j >= p_i
  double y_rule_risk_flip = 0.0;    // ties predicted as p_j < p_i
  double constant_rule_risk = 0.0;  // always predicts p_j >= p_i
};

/// Exact pairwise misordering risk of every deterministic rule
/// delta(y_i, y_j) in {-1,+1}, for t in {1,2} and a grid prior with at
/// least 64 cells. The loss is 1 when the rule's predicted order
/// disagrees with the order of p.
BayesRankingReport bayes_ranking_check(const Prior& grid_prior, const ObservationModel& model,
                                       int t, Convention convention = Convention::appendix_c);

}  // namespace alloctime
