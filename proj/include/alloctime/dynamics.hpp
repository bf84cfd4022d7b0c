#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alloctime/model.hpp"
#include "alloctime/parallel.hpp"
#include "alloctime/quadrature.hpp"

namespace alloctime {

/// Where the survival factor enters the posterior. `appendix_c` lets the
/// first observation happen before any failure, so a cohort at t carries
/// (1-p)^{t-1}. `section_5_3` places a failure round before the first
/// observation, giving (1-p)^t.
enum class Convention { appendix_c, section_5_3 };

const char* to_string(Convention c);
Convention convention_from_string(const std::string& name);
/// Exponent of (1-p) carried by the cohorts observed at time t.
int survival_exponent(int t, Convention c);

/// Density over p, stored as a base prior times a tilt, plus the fraction
/// of the initial pool it represents.
class PopulationDensity {
 public:
  PopulationDensity(Prior base, ObservationModel model, Tilt tilt = {}, double active_mass = 1.0);

  const Prior& base() const { return base_; }
  const ObservationModel& model() const { return model_; }
  const Tilt& tilt() const { return tilt_; }
  double active_mass() const { return active_mass_; }

  /// Exact Beta form when the tilt folds into the parameters (Beta base and
  /// gamma = 1 or no positive-observation factor).
  std::optional<BetaParams> closed_form() const;

  /// Integral of f against the normalized density by quadrature (exact sum
  /// for grid priors).
  double expect(const std::function<double(double)>& f) const;
  double mean() const;
  double variance() const;

 private:
  Prior base_;
  ObservationModel model_;
  Tilt tilt_;
  double active_mass_;
};

/// One step of attrition: density times (1-p), mass times (1 - mean).
PopulationDensity survival_update(const PopulationDensity& pop);

struct PosteriorSpec {
  int t = 1;
  int k = 0;
};

/// Density of individuals still active and untreated at t with y^t = k.
/// active_mass is the cohort mass N_k^t.
PopulationDensity posterior(const Prior& prior, const ObservationModel& model, PosteriorSpec spec,
                            Convention convention = Convention::appendix_c);

double posterior_expect(const PopulationDensity& density, const std::function<double(double)>& f);

struct CohortStats {
  double mu = 0.0;      // E[p]
  double stilde = 0.0;  // E[(1-p) ptilde]
};

CohortStats cohort_stats(const Prior& prior, const ObservationModel& model, PosteriorSpec spec,
                         Convention convention = Convention::appendix_c);

/// masses[k] = N_k^t / N for k = 0..t.
struct CohortTable {
  int t = 1;
  std::vector<double> masses;
  double total() const;
};

CohortTable initial_cohorts(const Prior& prior, const ObservationModel& model,
                            Convention convention = Convention::appendix_c);

/// Posterior expectations for every (t, k) with 1 <= t <= T, 0 <= k <= t.
/// These are the coefficients of the backup recursion and the per-capita
/// utilities of each cohort.
class CohortDynamics {
 public:
  CohortDynamics(const Prior& prior, const ObservationModel& model, int horizon,
                 Convention convention = Convention::appendix_c,
                 std::optional<UtilityFunction> utility = std::nullopt, Exec exec = Exec::parallel,
                 std::size_t nodes_per_half = kDefaultNodesPerHalf);

  int horizon() const { return horizon_; }
  Convention convention() const { return convention_; }
  bool has_utility() const { return has_utility_; }

  /// E_k^t[(1-p)(1-ptilde)]: stays in cohort k at t+1.
  double stay(int t, int k) const { return stay_[index(t, k)]; }
  /// E_k^t[(1-p) ptilde]: moves to cohort k+1 at t+1.
  double up(int t, int k) const { return up_[index(t, k)]; }
  /// E_k^t[p].
  double mu(int t, int k) const { return mu_[index(t, k)]; }
  /// U_k^t = E_k^t[u^t(p)].
  double value(int t, int k) const;
  /// Untreated cohort masses at t, computed directly (not by recursion).
  const CohortTable& untreated(int t) const { return untreated_.at(t - 1); }

 private:
  std::size_t index(int t, int k) const;
  int horizon_;
  Convention convention_;
  bool has_utility_;
  std::vector<double> stay_, up_, mu_, value_;
  std::vector<CohortTable> untreated_;
};

/// Forward run from t0. treat_fraction(t, k) in [0,1] is the share of
/// cohort k treated at t. Tables are pre-treatment.
struct Trajectory {
  int t0 = 1;
  std::vector<CohortTable> tables;
  std::vector<double> treated_mass;
  std::vector<double> failed_mass;  // failures between t and t+1
};

Trajectory simulate_fractional(const CohortDynamics& dyn, int t0, const CohortTable& init,
                               const std::function<double(int, int)>& treat_fraction);

/// Threshold form: q[t - t0] is q(t); cohorts k >= q(t) are treated,
/// q(t) = t+1 treats nobody. Returns the full trajectory.
Trajectory simulate_trajectory(const CohortDynamics& dyn, int t0, const CohortTable& init,
                               const std::vector<int>& q);

/// N_{q(t)}^t for t = t0..T from a trajectory.
std::vector<double> threshold_slice(const Trajectory& traj, const std::vector<int>& q);

}  // namespace alloctime
