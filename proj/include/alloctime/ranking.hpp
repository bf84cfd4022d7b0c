#pragma once

#include <cstdint>

#include "alloctime/dynamics.hpp"
#include "alloctime/model.hpp"
#include "alloctime/parallel.hpp"

namespace alloctime {

struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int t = 1;
  long pairs_used = 0;
};

/// How a pair with y_i = y_j is scored. `strict` counts only y_j < y_i as a
/// loss. `half` charges 1/2, i.e. ties broken by a fair coin.
enum class TiePolicy { strict, half };

struct RankingMCOptions {
  std::size_t n_agents = 200000;
  std::size_t n_pairs = 1000000;
  std::uint64_t seed = 1;
  TiePolicy ties = TiePolicy::strict;
  Convention convention = Convention::appendix_c;
  Exec exec = Exec::parallel;
};

/// Simulates the untreated population up to t, draws ordered pairs of
/// distinct active agents, keeps those with p_j >= p_i and scores
/// y_j < y_i. Throws if fewer than two agents remain active.
RiskEstimate ranking_risk_mc(const Prior& prior, const ObservationModel& model, int t,
                             const RankingMCOptions& options = {});

struct ApproxOptions {
  Convention convention = Convention::appendix_c;
  std::size_t nodes_per_half = 1024;
  Exec exec = Exec::parallel;
};

/// Normal approximation: E[Phi(-|dptilde| sqrt(t) / sigma)] over two
/// independent draws from the surviving population at t.
RiskEstimate ranking_risk_approx(const Prior& prior, const ObservationModel& model, int t,
                                 const ApproxOptions& options = {});

struct RiskDecomposition {
  double delta = 0.0;
  double population_effect = 0.0;
  double observation_effect = 0.0;
};

/// First-order change of the approximate risk from t to t+1: reweighting of
/// the population plus the effect of one more observation.
RiskDecomposition delta_ranking_risk(const Prior& prior, const ObservationModel& model, int t,
                                     const ApproxOptions& options = {});

struct Thm31Inputs {
  double alpha_cutoff = 0.5;
  double lipschitz_inv = 1.0;
  double epsilon = 0.0;
};

struct Thm31Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool improvement_possible = false;
};

/// Compares the variance term against the observation gain. When
/// improvement_possible is false the risk cannot decrease at t.
Thm31Result thm31_condition(const Prior& prior, const ObservationModel& model, int t,
                            const Thm31Inputs& inputs = {},
                            Convention convention = Convention::appendix_c);

}  // namespace alloctime
