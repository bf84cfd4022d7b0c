#include "alloctime/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include <omp.h>

namespace alloctime {

int max_threads() { return omp_get_max_threads(); }

const char* to_string(Convention c) {
  return c == Convention::appendix_c ? "appendix_c" : "section_5_3";
}

Convention convention_from_string(const std::string& name) {
  if (name == "appendix_c") return Convention::appendix_c;
  if (name == "section_5_3") return Convention::section_5_3;
  throw DomainError("unknown posterior convention: " + name);
}

int survival_exponent(int t, Convention c) { return c == Convention::appendix_c ? t - 1 : t; }

namespace {

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

PopulationDensity::PopulationDensity(Prior base, ObservationModel model, Tilt tilt,
                                     double active_mass)
    : base_(std::move(base)), model_(model), tilt_(tilt), active_mass_(active_mass) {
  if (!(active_mass >= 0.0 && active_mass <= 1.0 + 1e-12)) {
    throw DomainError("active mass must lie in [0,1]");
  }
}

std::optional<BetaParams> PopulationDensity::closed_form() const {
  if (!base_.is_beta()) return std::nullopt;
  const auto& b = base_.as_beta();
  const double g = model_.gamma();
  if (tilt_.positives == 0.0) {
    return BetaParams{b.alpha, b.beta + tilt_.survival + g * tilt_.negatives};
  }
  if (g == 1.0) {
    return BetaParams{b.alpha + tilt_.positives, b.beta + tilt_.survival + tilt_.negatives};
  }
  return std::nullopt;
}

double PopulationDensity::expect(const std::function<double(double)>& f) const {
  const auto nodes = discretize(base_);
  const auto w = tilted_weights(nodes, model_, tilt_);
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (w[i] != 0.0) sum += w[i] * f(nodes.p[i]);
  }
  return sum;
}

double PopulationDensity::mean() const {
  return expect([](double p) { return p; });
}

double PopulationDensity::variance() const {
  const auto nodes = discretize(base_);
  const auto w = tilted_weights(nodes, model_, tilt_);
  double m = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) m += w[i] * nodes.p[i];
  double v = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) v += w[i] * (nodes.p[i] - m) * (nodes.p[i] - m);
  return v;
}

PopulationDensity survival_update(const PopulationDensity& pop) {
  if (!(pop.active_mass() > 0.0)) throw DomainError("population extinct");
  const double mu = pop.mean();
  Tilt tilt = pop.tilt();
  tilt.survival += 1.0;
  return PopulationDensity(pop.base(), pop.model(), tilt, pop.active_mass() * (1.0 - mu));
}

PopulationDensity posterior(const Prior& prior, const ObservationModel& model, PosteriorSpec spec,
                            Convention convention) {
  if (spec.t < 1 || spec.k < 0 || spec.k > spec.t) throw DomainError("need 0 <= k <= t, t >= 1");
  const Tilt tilt{static_cast<double>(survival_exponent(spec.t, convention)),
                  static_cast<double>(spec.k), static_cast<double>(spec.t - spec.k)};
  const auto nodes = discretize(prior);
  const double log_mass = log_tilted_mass(nodes, model, tilt);
  if (!std::isfinite(log_mass)) throw DomainError("degenerate posterior");
  const double mass = std::exp(log_binomial(spec.t, spec.k) + log_mass);
  return PopulationDensity(prior, model, tilt, std::min(mass, 1.0));
}

double posterior_expect(const PopulationDensity& density, const std::function<double(double)>& f) {
  return density.expect(f);
}

CohortStats cohort_stats(const Prior& prior, const ObservationModel& model, PosteriorSpec spec,
                         Convention convention) {
  const auto post = posterior(prior, model, spec, convention);
  CohortStats s;
  s.mu = post.mean();
  s.stilde = post.expect([&model](double p) { return (1.0 - p) * model.ptilde(p); });
  return s;
}

double CohortTable::total() const {
  double s = 0.0;
  for (double m : masses) s += m;
  return s;
}

CohortTable initial_cohorts(const Prior& prior, const ObservationModel& model,
                            Convention convention) {
  CohortDynamics dyn(prior, model, 1, convention, std::nullopt, Exec::serial);
  return dyn.untreated(1);
}

CohortDynamics::CohortDynamics(const Prior& prior, const ObservationModel& model, int horizon,
                               Convention convention, std::optional<UtilityFunction> utility,
                               Exec exec, std::size_t nodes_per_half)
    : horizon_(horizon), convention_(convention), has_utility_(utility.has_value()) {
  if (horizon < 1) throw DomainError("horizon must be at least 1");
  if (utility && utility->horizon() != horizon) {
    throw DomainError("utility horizon does not match dynamics horizon");
  }
  const auto nodes = discretize(prior, nodes_per_half);
  const std::size_t n = nodes.size();
  const double g = model.gamma();

  // Per-node logs of the tilt factors and the integrands that do not
  // depend on the cohort.
  std::vector<double> log_w(n), log_q(n), log_pt(n), log_nt(n), stay_f(n), up_f(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = nodes.p[i], q = nodes.q[i];
    log_w[i] = nodes.w[i] > 0.0 ? std::log(nodes.w[i]) : -INFINITY;
    log_q[i] = q > 0.0 ? (p < 0.5 ? std::log1p(-p) : std::log(q)) : -INFINITY;
    log_nt[i] = q > 0.0 ? g * log_q[i] : -INFINITY;
    log_pt[i] = p > 0.0 ? (q > 0.0 ? std::log(-std::expm1(log_nt[i])) : 0.0) : -INFINITY;
    const double neg = q > 0.0 ? std::exp(log_nt[i]) : 0.0;
    stay_f[i] = q * neg;
    up_f[i] = q * (1.0 - neg);
  }

  const std::size_t cells = static_cast<std::size_t>(horizon) * (horizon + 3) / 2;
  stay_.assign(cells, 0.0);
  up_.assign(cells, 0.0);
  mu_.assign(cells, 0.0);
  value_.assign(cells, 0.0);
  std::vector<double> mass(cells, 0.0);

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(cells);
  for (int t = 1; t <= horizon; ++t)
    for (int k = 0; k <= t; ++k) pairs.emplace_back(t, k);

  auto cell = [&](std::size_t idx) {
    const auto [t, k] = pairs[idx];
    const double s = survival_exponent(t, convention);
    std::vector<double> lw(n);
    double top = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      double v = log_w[i];
      if (s != 0.0) v += s * log_q[i];
      if (k != 0) v += k * log_pt[i];
      if (t - k != 0) v += (t - k) * log_nt[i];
      if (std::isnan(v)) v = -INFINITY;
      lw[i] = v;
      top = std::max(top, v);
    }
    const std::size_t at = index(t, k);
    if (!std::isfinite(top)) return;
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lw[i] = std::exp(lw[i] - top);
      z += lw[i];
    }
    double st = 0.0, u = 0.0, m = 0.0, val = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = lw[i] / z;
      if (w == 0.0) continue;
      st += w * stay_f[i];
      u += w * up_f[i];
      m += w * nodes.p[i];
      if (utility) val += w * (*utility)(t, nodes.p[i]);
    }
    stay_[at] = st;
    up_[at] = u;
    mu_[at] = m;
    value_[at] = val;
    mass[at] = std::exp(log_binomial(t, k) + top + std::log(z));
  };

  const long total = static_cast<long>(pairs.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long idx = 0; idx < total; ++idx) cell(static_cast<std::size_t>(idx));
  } else {
    for (long idx = 0; idx < total; ++idx) cell(static_cast<std::size_t>(idx));
  }

  untreated_.resize(horizon);
  for (int t = 1; t <= horizon; ++t) {
    auto& table = untreated_[t - 1];
    table.t = t;
    table.masses.resize(t + 1);
    for (int k = 0; k <= t; ++k) table.masses[k] = mass[index(t, k)];
  }
}

std::size_t CohortDynamics::index(int t, int k) const {
  if (t < 1 || t > horizon_ || k < 0 || k > t) throw DomainError("cohort index out of range");
  // Rows t = 1..T hold t+1 entries; row t starts at sum_{s<t}(s+1).
  return static_cast<std::size_t>((t - 1) * (t + 2) / 2 + k);
}

double CohortDynamics::value(int t, int k) const {
  if (!has_utility_) throw DomainError("dynamics were built without a utility");
  return value_[index(t, k)];
}

Trajectory simulate_fractional(const CohortDynamics& dyn, int t0, const CohortTable& init,
                               const std::function<double(int, int)>& treat_fraction) {
  const int T = dyn.horizon();
  if (t0 < 1 || t0 > T) throw DomainError("start time outside [1, T]");
  if (init.t != t0 || static_cast<int>(init.masses.size()) != t0 + 1) {
    throw DomainError("initial table does not match start time");
  }
  Trajectory traj;
  traj.t0 = t0;
  CohortTable cur = init;
  for (int t = t0; t <= T; ++t) {
    std::vector<double> rest(t + 1);
    double treated = 0.0, failed = 0.0;
    for (int k = 0; k <= t; ++k) {
      const double f = treat_fraction(t, k);
      if (!(f >= 0.0 && f <= 1.0)) throw DomainError("treatment fraction outside [0,1]");
      const double x = f * cur.masses[k];
      treated += x;
      rest[k] = cur.masses[k] - x;
      failed += rest[k] * dyn.mu(t, k);
    }
    traj.tables.push_back(cur);
    traj.treated_mass.push_back(treated);
    traj.failed_mass.push_back(t < T ? failed : 0.0);
    if (t == T) break;
    CohortTable next;
    next.t = t + 1;
    next.masses.assign(t + 2, 0.0);
    for (int k = 0; k <= t; ++k) {
      if (rest[k] == 0.0) continue;
      next.masses[k] += rest[k] * dyn.stay(t, k);
      next.masses[k + 1] += rest[k] * dyn.up(t, k);
    }
    cur = std::move(next);
  }
  return traj;
}

namespace {

void check_thresholds(int t0, int T, const std::vector<int>& q) {
  if (static_cast<int>(q.size()) != T - t0 + 1) throw DomainError("invalid q shape: wrong length");
  for (std::size_t i = 0; i < q.size(); ++i) {
    const int t = t0 + static_cast<int>(i);
    if (q[i] < 0 || q[i] > t + 1) throw DomainError("invalid q shape: q(t) outside [0, t+1]");
    if (i > 0 && q[i] < q[i - 1]) throw DomainError("invalid q shape: q must be non-decreasing");
  }
}

}  // namespace

Trajectory simulate_trajectory(const CohortDynamics& dyn, int t0, const CohortTable& init,
                               const std::vector<int>& q) {
  check_thresholds(t0, dyn.horizon(), q);
  return simulate_fractional(dyn, t0, init,
                             [&](int t, int k) { return k >= q[t - t0] ? 1.0 : 0.0; });
}

std::vector<double> threshold_slice(const Trajectory& traj, const std::vector<int>& q) {
  std::vector<double> out;
  for (std::size_t i = 0; i < traj.tables.size() && i < q.size(); ++i) {
    const auto& m = traj.tables[i].masses;
    out.push_back(q[i] < static_cast<int>(m.size()) ? m[q[i]] : 0.0);
  }
  return out;
}

}  // namespace alloctime
