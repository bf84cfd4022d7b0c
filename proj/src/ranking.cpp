#include "alloctime/ranking.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "alloctime/agents.hpp"
#include "alloctime/quadrature.hpp"

namespace alloctime {

RiskEstimate ranking_risk_mc(const Prior& prior, const ObservationModel& model, int t,
                             const RankingMCOptions& options) {
  if (t < 1) throw DomainError("t must be at least 1");
  if (options.n_agents < 2) throw DomainError("population too small");
  AgentPool pool(prior, model, options.n_agents, options.seed, options.convention);
  for (int s = 1; s <= t; ++s) pool.advance();

  std::vector<double> p;
  std::vector<int> y;
  for (const auto& a : pool.agents()) {
    if (a.active) {
      p.push_back(a.p);
      y.push_back(a.y);
    }
  }
  const long n = static_cast<long>(p.size());
  if (n < 2) throw DomainError("population too small");

  const std::uint64_t pair_seed = mix64(options.seed ^ 0x5eedULL);
  const long pairs = static_cast<long>(options.n_pairs);
  const bool half = options.ties == TiePolicy::half;
  // Losses are counted in halves so the reduction stays in integers.
  long accepted = 0, loss2 = 0, loss2_sq = 0;
  auto draw = [&](long m, long& acc, long& l2, long& l2sq) {
    const long i = static_cast<long>(keyed_bits(pair_seed, m, 0, 0) % static_cast<std::uint64_t>(n));
    long j = static_cast<long>(keyed_bits(pair_seed, m, 0, 1) % static_cast<std::uint64_t>(n - 1));
    if (j >= i) ++j;
    if (p[j] < p[i]) return;
    ++acc;
    long l = 0;
    if (y[j] < y[i]) l = 2;
    else if (half && y[j] == y[i]) l = 1;
    l2 += l;
    l2sq += l * l;
  };
  if (options.exec == Exec::parallel) {
#pragma omp parallel for reduction(+ : accepted, loss2, loss2_sq)
    for (long m = 0; m < pairs; ++m) draw(m, accepted, loss2, loss2_sq);
  } else {
    for (long m = 0; m < pairs; ++m) draw(m, accepted, loss2, loss2_sq);
  }
  if (accepted == 0) throw DomainError("no pair satisfied p_j >= p_i");

  RiskEstimate est;
  est.t = t;
  est.pairs_used = accepted;
  const double a = static_cast<double>(accepted);
  est.value = 0.5 * static_cast<double>(loss2) / a;
  const double second = 0.25 * static_cast<double>(loss2_sq) / a;
  const double var = std::max(0.0, second - est.value * est.value);
  est.std_error = accepted > 1 ? std::sqrt(var / (a - 1.0)) : 0.0;
  return est;
}

namespace {

struct PairGrid {
  std::vector<double> p, q, w, pt, var;  // var = pt (1 - pt)
  double mu = 0.0;
};

PairGrid surviving_population(const Prior& prior, const ObservationModel& model, int t,
                              const ApproxOptions& options) {
  const auto nodes = discretize(prior, options.nodes_per_half);
  const Tilt tilt{static_cast<double>(survival_exponent(t, options.convention)), 0.0, 0.0};
  PairGrid g;
  g.w = tilted_weights(nodes, model, tilt);
  g.p = nodes.p;
  g.q = nodes.q;
  const std::size_t n = nodes.size();
  g.pt.resize(n);
  g.var.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.pt[i] = model.ptilde_from_survival(nodes.q[i]);
    g.var[i] = g.pt[i] * model.negative_rate_from_survival(nodes.q[i]);
    g.mu += g.w[i] * g.p[i];
  }
  return g;
}

// Standardized gap |dptilde| / sigma; +inf when sigma = 0 and the values differ.
double gap(const PairGrid& g, std::size_t i, std::size_t j) {
  const double d = std::abs(g.pt[j] - g.pt[i]);
  const double s2 = g.var[i] + g.var[j];
  if (s2 <= 0.0) return d == 0.0 ? 0.0 : INFINITY;
  return d / std::sqrt(s2);
}

double normal_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Sums f(i, j) * w_i * w_j over all ordered pairs, row by row so that the
// serial and parallel paths add in the same order.
template <class F>
double pair_sum(const PairGrid& g, Exec exec, F f) {
  const long n = static_cast<long>(g.w.size());
  std::vector<double> rows(n, 0.0);
  auto row = [&](long i) {
    if (g.w[i] == 0.0) return;
    double s = 0.0;
    for (long j = 0; j < n; ++j) {
      if (g.w[j] != 0.0) s += g.w[j] * f(i, j);
    }
    rows[i] = g.w[i] * s;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < n; ++i) row(i);
  } else {
    for (long i = 0; i < n; ++i) row(i);
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

}  // namespace

RiskEstimate ranking_risk_approx(const Prior& prior, const ObservationModel& model, int t,
                                 const ApproxOptions& options) {
  if (t < 1) throw DomainError("t must be at least 1");
  const auto g = surviving_population(prior, model, t, options);
  const double rt = std::sqrt(static_cast<double>(t));
  RiskEstimate est;
  est.t = t;
  est.value = pair_sum(g, options.exec, [&](long i, long j) {
    const double x = gap(g, i, j);
    return std::isinf(x) ? 0.0 : normal_tail(x * rt);
  });
  return est;
}

RiskDecomposition delta_ranking_risk(const Prior& prior, const ObservationModel& model, int t,
                                     const ApproxOptions& options) {
  if (t < 1) throw DomainError("t must be at least 1");
  const auto g = surviving_population(prior, model, t, options);
  const double dt = static_cast<double>(t);
  const double rt = std::sqrt(dt);
  const double scale = 1.0 / (1.0 - g.mu);
  RiskDecomposition d;
  d.population_effect = pair_sum(g, options.exec, [&](long i, long j) {
    const double x = gap(g, i, j);
    if (std::isinf(x)) return 0.0;
    const double reweight = g.q[i] * scale * g.q[j] * scale - 1.0;
    return reweight * normal_tail(x * rt);
  });
  const double k = 1.0 / std::sqrt(2.0 * std::numbers::pi * dt);
  d.observation_effect = pair_sum(g, options.exec, [&](long i, long j) {
    const double x = gap(g, i, j);
    if (std::isinf(x) || x == 0.0) return 0.0;
    return -k * std::exp(-0.5 * x * x * dt) * 0.5 * x;
  });
  d.delta = d.population_effect + d.observation_effect;
  return d;
}

Thm31Result thm31_condition(const Prior& prior, const ObservationModel& model, int t,
                            const Thm31Inputs& inputs, Convention convention) {
  if (t < 1) throw DomainError("t must be at least 1");
  if (!(inputs.alpha_cutoff > 0.0 && inputs.alpha_cutoff < 1.0)) {
    throw DomainError("alpha cutoff must lie in (0,1)");
  }
  if (!(inputs.lipschitz_inv > 0.0)) throw DomainError("Lipschitz constant must be positive");
  if (!(inputs.epsilon >= 0.0 && inputs.epsilon < 0.5)) {
    throw DomainError("epsilon must lie in [0, 0.5)");
  }
  const PopulationDensity pop(
      prior, model, Tilt{static_cast<double>(survival_exponent(t, convention)), 0.0, 0.0});
  const double mu = pop.mean();
  const double var = pop.variance();
  const double c = std::log(1.0 / inputs.alpha_cutoff);
  const double slack =
      inputs.lipschitz_inv / (1.0 - 2.0 * inputs.epsilon) * std::sqrt(2.0 * c / t);
  Thm31Result r;
  r.lhs = var / ((1.0 - mu) * (1.0 - mu)) - slack / (1.0 - mu);
  r.rhs = c / t;
  r.improvement_possible = r.lhs < r.rhs;
  return r;
}

}  // namespace alloctime
