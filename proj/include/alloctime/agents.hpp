#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "alloctime/dynamics.hpp"
#include "alloctime/model.hpp"

namespace alloctime {

std::uint64_t mix64(std::uint64_t x);
/// Counter-based draw keyed by (seed, agent, t, draw). Independent of the
/// order in which keys are visited.
std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t agent, std::uint64_t t,
                         std::uint64_t draw);
/// Uniform on [0,1) with 53 random bits.
double keyed_uniform(std::uint64_t seed, std::uint64_t agent, std::uint64_t t, std::uint64_t draw);

/// UniformRandomBitGenerator over a keyed counter stream, for feeding
/// standard distributions.
class KeyedEngine {
 public:
  using result_type = std::uint64_t;
  KeyedEngine(std::uint64_t seed, std::uint64_t agent, std::uint64_t stream)
      : seed_(seed), agent_(agent), stream_(stream) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return keyed_bits(seed_, agent_, stream_, counter_++); }

 private:
  std::uint64_t seed_, agent_, stream_;
  std::uint64_t counter_ = 0;
};

/// Draws p for one agent from the prior.
double sample_prior(const Prior& prior, std::uint64_t seed, std::uint64_t agent);

struct AgentRecord {
  double p = 0.0;
  int y = 0;
  bool active = true;
  bool treated = false;
  int treated_at = 0;
};

/// Finite population following the continuum timeline: at each t, active
/// untreated agents first face failure (from t = 2 on under appendix_c,
/// from t = 1 under section_5_3), then survivors draw one observation.
class AgentPool {
 public:
  AgentPool(const Prior& prior, const ObservationModel& model, std::size_t n, std::uint64_t seed,
            Convention convention = Convention::appendix_c);

  /// Moves to the next time step. Returns the number of failures.
  long advance();
  int time() const { return t_; }
  std::size_t size() const { return agents_.size(); }
  const std::vector<AgentRecord>& agents() const { return agents_; }
  std::uint64_t seed() const { return seed_; }

  /// Active, untreated agents by y at the current time.
  std::vector<long> untreated_counts() const;
  /// Treats counts[k] agents of each cohort k, chosen by keyed priority.
  /// Returns the sum of u^t(p) over newly treated agents (agent order).
  double treat(const std::vector<long>& counts, const UtilityFunction* utility);

 private:
  ObservationModel model_;
  Convention convention_;
  std::uint64_t seed_;
  int t_ = 0;
  std::vector<AgentRecord> agents_;
};

/// Integer treatment counts per cohort given t, untreated counts by y and
/// the remaining budget.
using MCPolicy = std::function<std::vector<long>(int t, const std::vector<long>& untreated,
                                                 long budget_left)>;

/// Treats everyone with y >= q(t) except that at t_hat only a (1-rho) share
/// of cohort q(t_hat) is treated. Counts are capped by the budget from the
/// highest y down.
MCPolicy threshold_policy(int t_hat, std::vector<int> q, double rho);
/// Spends the whole budget at t_treat from the highest y down.
MCPolicy one_time_policy(int t_treat);

struct StepRecord {
  int t = 0;
  std::vector<long> active_by_y;  // untreated, before treatment
  long failures = 0;              // failures on entering t
  long treatments = 0;
  double utility = 0.0;           // sum of u^t(p) over agents treated at t
};

struct MCResult {
  std::vector<StepRecord> steps;
  long treated = 0;
  double total_utility = 0.0;
};

/// Runs T steps. Without a policy nobody is treated.
MCResult mc_simulate(AgentPool& pool, const UtilityFunction* utility, const MCPolicy* policy,
                     int T, long budget = std::numeric_limits<long>::max());

}  // namespace alloctime
