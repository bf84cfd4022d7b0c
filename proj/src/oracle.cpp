#include "alloctime/oracle.hpp"

#include <cmath>
#include <numeric>

#include "alloctime/agents.hpp"
#include "alloctime/quadrature.hpp"

namespace alloctime {

void OracleConfig::validate() const {
  if (budget_units < 1 || budget_units > 200) {
    throw DomainError("oracle budget_units must lie in [1, 200]");
  }
  if (T < 1 || T > 6) throw DomainError("oracle horizon capped at T <= 6");
}

namespace {

struct Search {
  const CohortDynamics* dyn;
  int T;
  double unit_mass;
  int forced_first;  // units at t = 1, or -1 for all
  std::vector<int> split;
  std::size_t leaves = 0;
  double best = -INFINITY;
  double best_spent = 0.0;
  std::vector<int> best_split;

  // Cohorts at t before treatment, with `left` units still unassigned.
  void descend(const CohortTable& table, int left, double utility, double spent) {
    const int t = table.t;
    int lo = t == T ? left : 0, hi = left;
    if (t == 1 && forced_first >= 0 && T > 1) lo = hi = forced_first;
    for (int u = lo; u <= hi; ++u) {
      split[t - 1] = u;
      double budget = u * unit_mass;
      double gained = 0.0, used = 0.0;
      std::vector<double> rest = table.masses;
      for (int k = t; k >= 0 && budget > 0.0; --k) {
        const double x = std::min(rest[k], budget);
        if (x <= 0.0) continue;
        rest[k] -= x;
        budget -= x;
        used += x;
        gained += x * dyn->value(t, k);
      }
      if (t == T) {
        ++leaves;
        if (utility + gained > best) {
          best = utility + gained;
          best_spent = spent + used;
          best_split = split;
        }
        continue;
      }
      CohortTable next;
      next.t = t + 1;
      next.masses.assign(t + 2, 0.0);
      for (int k = 0; k <= t; ++k) {
        if (rest[k] == 0.0) continue;
        next.masses[k] += rest[k] * dyn->stay(t, k);
        next.masses[k + 1] += rest[k] * dyn->up(t, k);
      }
      descend(next, left - u, utility + gained, spent + used);
    }
  }
};

}  // namespace

BruteForceResult brute_force_over_time(const CohortDynamics& dyn, BudgetSpec budget,
                                       const OracleConfig& cfg, Exec exec) {
  cfg.validate();
  if (cfg.T != dyn.horizon()) throw DomainError("oracle horizon does not match dynamics");
  if (!dyn.has_utility()) throw DomainError("dynamics were built without a utility");
  const int U = cfg.budget_units;
  const int T = cfg.T;
  const double unit_mass = budget.fraction / U;
  const CohortTable& first = dyn.untreated(1);

  // Branch on the units spent at t = 1; each branch is an independent DFS.
  const int branches = T == 1 ? 1 : U + 1;
  std::vector<Search> results;
  results.reserve(branches);
  for (int i = 0; i < branches; ++i) {
    results.push_back(Search{&dyn, T, unit_mass, T == 1 ? -1 : i, std::vector<int>(T, 0), 0, -INFINITY, 0.0, {}});
  }
  auto run = [&](int i) { results[i].descend(first, U, 0.0, 0.0); };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < branches; ++i) run(i);
  } else {
    for (int i = 0; i < branches; ++i) run(i);
  }

  BruteForceResult out;
  out.utility_per_capita = -INFINITY;
  for (const auto& s : results) {
    out.rollouts += s.leaves;
    if (s.best > out.utility_per_capita) {
      out.utility_per_capita = s.best;
      out.split = s.best_split;
      out.spent = s.best_spent;
    }
  }
  return out;
}

MCValue mc_policy_value(const PolicySchedule& policy, const Prior& prior,
                        const ObservationModel& model, const UtilityFunction& utility,
                        BudgetSpec budget, std::size_t N, int reps, std::uint64_t seed,
                        Convention convention) {
  const long cap = static_cast<long>(std::floor(static_cast<double>(N) * budget.fraction));
  if (cap < 1) throw DomainError("N b must be at least 1");
  if (reps < 1) throw DomainError("need at least one replicate");
  if (static_cast<int>(policy.q.size()) != utility.horizon()) {
    throw DomainError("schedule length does not match horizon");
  }
  const auto rule = threshold_policy(policy.t_hat, policy.q, policy.rho);
  MCValue v;
  for (int r = 0; r < reps; ++r) {
    AgentPool pool(prior, model, N, mix64(seed + 0x1000193ULL * static_cast<std::uint64_t>(r)),
                   convention);
    const auto res = mc_simulate(pool, &utility, &rule, utility.horizon(), cap);
    v.replicates.push_back(res.total_utility / static_cast<double>(N));
  }
  v.mean = std::accumulate(v.replicates.begin(), v.replicates.end(), 0.0) / reps;
  double ss = 0.0;
  for (double x : v.replicates) ss += (x - v.mean) * (x - v.mean);
  v.std_error = reps > 1 ? std::sqrt(ss / (reps - 1) / reps) : 0.0;
  return v;
}

BayesRankingReport bayes_ranking_check(const Prior& grid_prior, const ObservationModel& model,
                                       int t, Convention convention) {
  if (t < 1) throw DomainError("t must be at least 1");
  if (t > 2) throw DomainError("combinatorially capped");
  if (grid_prior.is_beta() || grid_prior.as_grid().points.size() < 64) {
    throw DomainError("Bayes ranking check needs a grid prior with at least 64 cells");
  }
  const auto nodes = discretize(grid_prior);
  const auto w = tilted_weights(
      nodes, model, Tilt{static_cast<double>(survival_exponent(t, convention)), 0.0, 0.0});
  const std::size_t n = nodes.size();
  const int K = t + 1;

  // like[a][y] = Pr(y^t = y | p_a).
  std::vector<std::vector<double>> like(n, std::vector<double>(K));
  for (std::size_t a = 0; a < n; ++a) {
    const double pt = model.ptilde(nodes.p[a]);
    for (int y = 0; y < K; ++y) {
      like[a][y] = std::exp(std::lgamma(t + 1.0) - std::lgamma(y + 1.0) - std::lgamma(t - y + 1.0)) *
                   std::pow(pt, y) * std::pow(1.0 - pt, t - y);
    }
  }
  // lower[yi][yj] = Pr(p_j < p_i, y_i, y_j), upper = Pr(p_j > p_i, y_i, y_j).
  std::vector<double> lower(K * K, 0.0), upper(K * K, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < n; ++c) {
      if (a == c) continue;
      const double pair = w[a] * w[c];
      auto& dest = nodes.p[c] < nodes.p[a] ? lower : upper;
      for (int yi = 0; yi < K; ++yi)
        for (int yj = 0; yj < K; ++yj) dest[yi * K + yj] += pair * like[a][yi] * like[c][yj];
    }
  }

  // Rule bit set: predicts p_j >= p_i (+1); loses the p_j < p_i mass.
  auto risk = [&](std::uint32_t rule) {
    double r = 0.0;
    for (int cell = 0; cell < K * K; ++cell) r += (rule >> cell) & 1u ? lower[cell] : upper[cell];
    return r;
  };
  std::uint32_t y_strict = 0, y_flip = 0;
  for (int yi = 0; yi < K; ++yi) {
    for (int yj = 0; yj < K; ++yj) {
      const std::uint32_t bit = 1u << (yi * K + yj);
      if (yj > yi) {
        y_strict |= bit;
        y_flip |= bit;
      } else if (yj == yi) {
        y_strict |= bit;
      }
    }
  }

  BayesRankingReport rep;
  rep.rules = std::size_t{1} << (K * K);
  rep.min_risk = INFINITY;
  for (std::uint32_t rule = 0; rule < rep.rules; ++rule) rep.min_risk = std::min(rep.min_risk, risk(rule));
  rep.y_rule_risk_strict = risk(y_strict);
  rep.y_rule_risk_flip = risk(y_flip);
  rep.constant_rule_risk = risk(static_cast<std::uint32_t>(rep.rules - 1));
  const double tol = 1e-12;
  rep.y_rule_optimal = std::min(rep.y_rule_risk_strict, rep.y_rule_risk_flip) <= rep.min_risk + tol;
  return rep;
}

}  // namespace alloctime
