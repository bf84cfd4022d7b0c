#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace alloctime {

/// Raised when inputs violate a mathematical precondition.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

/// Discrete distribution over failure probabilities. Expectations are exact
/// sums over the atoms.
struct GridDensity {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Distribution of the per-step failure probability p over the initial pool.
class Prior {
 public:
  static Prior beta(double alpha, double beta);
  static Prior grid(std::vector<double> points, std::vector<double> weights);
  /// Single atom at p.
  static Prior point(double p);
  static Prior uniform() { return beta(1.0, 1.0); }
  /// Equal-width cells on [0,1] with the given per-cell density values
  /// (normalized internally), atoms at the cell midpoints.
  static Prior grid_from_density(std::size_t cells,
                                 const std::function<double(double)>& density);

  bool is_beta() const { return std::holds_alternative<BetaParams>(family_); }
  const BetaParams& as_beta() const;
  const GridDensity& as_grid() const;

  double mean() const;
  double second_moment() const;
  double variance() const;

  /// Density value. Grid priors are read as piecewise-constant over the
  /// midpoint cells of the atoms.
  double density(double p) const;
  /// dP/dp. Closed form for Beta, central differences of the cell densities
  /// for grids.
  double density_derivative(double p) const;

 private:
  explicit Prior(std::variant<BetaParams, GridDensity> family)
      : family_(std::move(family)) {}
  std::variant<BetaParams, GridDensity> family_;
};

/// p -> 1 - (1-p)^gamma.
class ObservationModel {
 public:
  explicit ObservationModel(double gamma = 1.0);
  double gamma() const { return gamma_; }
  double ptilde(double p) const { return ptilde_from_survival(1.0 - p); }
  /// Same map written in q = 1-p, which keeps precision near p = 1.
  double ptilde_from_survival(double q) const;
  /// 1 - ptilde written in q = 1-p.
  double negative_rate_from_survival(double q) const;

 private:
  double gamma_;
};

enum class UtilityKind { FullyEffective, RiskyProcedure, PartialSuccess, RiskReduction };

const char* to_string(UtilityKind kind);
UtilityKind utility_kind_from_string(const std::string& name);

/// (lambda1, lambda2) of the bounded-decrease / bounded-increase pair.
/// lambda2 = +inf means only the first inequality is available.
struct DecayingConstants {
  double lambda1 = 0.0;
  double lambda2 = std::numeric_limits<double>::infinity();
  bool has_lambda2() const { return lambda2 < std::numeric_limits<double>::infinity(); }
};

/// Expected utility u^t(p) of treating an individual with failure
/// probability p at time t, for a horizon T.
class UtilityFunction {
 public:
  UtilityFunction(UtilityKind kind, int horizon, double param = 1.0);
  static UtilityFunction fully_effective(int horizon) {
    return UtilityFunction(UtilityKind::FullyEffective, horizon);
  }

  UtilityKind kind() const { return kind_; }
  int horizon() const { return horizon_; }
  double param() const { return param_; }

  double operator()(int t, double p) const;
  /// d u^t / dp.
  double derivative(int t, double p) const;
  DecayingConstants decaying_constants(int t) const;

 private:
  void check_time(int t) const;
  UtilityKind kind_;
  int horizon_;
  double param_;
};

double ptilde(double p, const ObservationModel& model);
double utility_eval(const UtilityFunction& u, int t, double p);
DecayingConstants decaying_constants(const UtilityFunction& u, int t);

struct GDecayReport {
  bool holds = true;
  /// Largest relative violation and where it occurred.
  double worst_violation = 0.0;
  double worst_point = 0.0;
  /// Largest relative gap between the closed-form and finite-difference
  /// derivative (0 for grids, whose derivative is already a difference).
  double max_fd_discrepancy = 0.0;
};

/// Checks -G P(p)/(1-p) <= dP/dp <= 0 on the interior points of a uniform
/// grid of `steps` cells (or at the interior atoms of a grid prior).
GDecayReport check_G_decaying(const Prior& prior, double G, int steps = 2048,
                              double tolerance = 1e-9);

struct GDecayBounds {
  double G = 0.0;
  double mu_lower = 0.5;
  /// Lower bound on Var[p] for a G-decaying prior with mean mu.
  double var_lower(double mu) const { return 2.0 * mu / (3.0 + G) - mu * mu; }
};

GDecayBounds g_decaying_bounds(double G);

/// First two raw moments E[p], E[p^2] of Beta(alpha, beta).
struct RawMoments {
  double m0 = 0.0;
  double m1 = 0.0;
};

RawMoments beta_forward_moments(double alpha, double beta);
/// Inverts the two-moment map; throws DomainError when no Beta matches.
Prior estimate_beta_prior(double m0, double m1);

double log_beta_function(double a, double b);

}  // namespace alloctime
