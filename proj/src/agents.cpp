#include "alloctime/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace alloctime {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t agent, std::uint64_t t,
                         std::uint64_t draw) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ agent);
  h = mix64(h ^ (t * 0x100000001b3ULL));
  return mix64(h ^ (draw + 0x632be59bd9b4e019ULL));
}

double keyed_uniform(std::uint64_t seed, std::uint64_t agent, std::uint64_t t,
                     std::uint64_t draw) {
  return static_cast<double>(keyed_bits(seed, agent, t, draw) >> 11) * 0x1.0p-53;
}

namespace {

constexpr std::uint64_t kPriorStream = 0xffffffffULL;

double sample_beta(const BetaParams& b, std::uint64_t seed, std::uint64_t agent) {
  KeyedEngine eng(seed, agent, kPriorStream);
  std::gamma_distribution<double> ga(b.alpha, 1.0), gb(b.beta, 1.0);
  for (;;) {
    const double x = ga(eng), y = gb(eng);
    if (x + y > 0.0) return x / (x + y);
  }
}

double sample_grid(const GridDensity& g, const std::vector<double>& cdf, std::uint64_t seed,
                   std::uint64_t agent) {
  const double u = keyed_uniform(seed, agent, kPriorStream, 0) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto i = std::min<std::size_t>(it - cdf.begin(), g.points.size() - 1);
  return g.points[i];
}

std::vector<double> grid_cdf(const GridDensity& g) {
  std::vector<double> cdf(g.weights.size());
  std::partial_sum(g.weights.begin(), g.weights.end(), cdf.begin());
  return cdf;
}

}  // namespace

double sample_prior(const Prior& prior, std::uint64_t seed, std::uint64_t agent) {
  if (prior.is_beta()) return sample_beta(prior.as_beta(), seed, agent);
  const auto& g = prior.as_grid();
  return sample_grid(g, grid_cdf(g), seed, agent);
}

AgentPool::AgentPool(const Prior& prior, const ObservationModel& model, std::size_t n,
                     std::uint64_t seed, Convention convention)
    : model_(model), convention_(convention), seed_(seed), agents_(n) {
  const long count = static_cast<long>(n);
  if (prior.is_beta()) {
    const auto b = prior.as_beta();
#pragma omp parallel for
    for (long i = 0; i < count; ++i) agents_[i].p = sample_beta(b, seed, i);
  } else {
    const auto& g = prior.as_grid();
    const auto cdf = grid_cdf(g);
#pragma omp parallel for
    for (long i = 0; i < count; ++i) agents_[i].p = sample_grid(g, cdf, seed, i);
  }
}

long AgentPool::advance() {
  ++t_;
  const bool fail_round = t_ > 1 || convention_ == Convention::section_5_3;
  const long count = static_cast<long>(agents_.size());
  long failures = 0;
#pragma omp parallel for reduction(+ : failures)
  for (long i = 0; i < count; ++i) {
    auto& a = agents_[i];
    if (!a.active || a.treated) continue;
    if (fail_round && keyed_uniform(seed_, i, t_, 0) < a.p) {
      a.active = false;
      ++failures;
      continue;
    }
    if (keyed_uniform(seed_, i, t_, 1) < model_.ptilde(a.p)) ++a.y;
  }
  return failures;
}

std::vector<long> AgentPool::untreated_counts() const {
  std::vector<long> counts(std::max(t_, 0) + 1, 0);
  for (const auto& a : agents_) {
    if (a.active && !a.treated) ++counts[a.y];
  }
  return counts;
}

double AgentPool::treat(const std::vector<long>& counts, const UtilityFunction* utility) {
  const long n = static_cast<long>(agents_.size());
  for (int k = 0; k < static_cast<int>(counts.size()); ++k) {
    if (counts[k] <= 0) continue;
    std::vector<std::pair<std::uint64_t, long>> members;
    for (long i = 0; i < n; ++i) {
      const auto& a = agents_[i];
      if (a.active && !a.treated && a.y == k) members.emplace_back(keyed_bits(seed_, i, t_, 2), i);
    }
    const auto take = std::min<std::size_t>(counts[k], members.size());
    if (take < members.size()) {
      std::nth_element(members.begin(), members.begin() + take, members.end());
    }
    for (std::size_t j = 0; j < take; ++j) {
      auto& a = agents_[members[j].second];
      a.treated = true;
      a.treated_at = t_;
    }
  }
  double sum = 0.0;
  if (utility) {
    for (const auto& a : agents_) {
      if (a.treated && a.treated_at == t_) sum += (*utility)(t_, a.p);
    }
  }
  return sum;
}

MCPolicy threshold_policy(int t_hat, std::vector<int> q, double rho) {
  return [t_hat, q = std::move(q), rho](int t, const std::vector<long>& untreated,
                                        long budget_left) {
    std::vector<long> take(untreated.size(), 0);
    const int qt = q.at(t - 1);
    for (int k = static_cast<int>(untreated.size()) - 1; k >= 0 && k >= qt; --k) {
      long want = untreated[k];
      if (k == qt && t == t_hat) want = std::llround((1.0 - rho) * static_cast<double>(want));
      take[k] = std::min(want, budget_left);
      budget_left -= take[k];
    }
    return take;
  };
}

MCPolicy one_time_policy(int t_treat) {
  return [t_treat](int t, const std::vector<long>& untreated, long budget_left) {
    std::vector<long> take(untreated.size(), 0);
    if (t != t_treat) return take;
    for (int k = static_cast<int>(untreated.size()) - 1; k >= 0; --k) {
      take[k] = std::min(untreated[k], budget_left);
      budget_left -= take[k];
    }
    return take;
  };
}

MCResult mc_simulate(AgentPool& pool, const UtilityFunction* utility, const MCPolicy* policy,
                     int T, long budget) {
  if (pool.time() != 0) throw DomainError("agent pool has already been advanced");
  MCResult result;
  long budget_left = budget;
  for (int t = 1; t <= T; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.failures = pool.advance();
    rec.active_by_y = pool.untreated_counts();
    if (policy) {
      auto take = (*policy)(t, rec.active_by_y, budget_left);
      take.resize(rec.active_by_y.size(), 0);
      long total = 0;
      for (std::size_t k = 0; k < take.size(); ++k) {
        take[k] = std::clamp(take[k], 0L, rec.active_by_y[k]);
        total += take[k];
      }
      // Trim from the lowest cohorts if the policy overspends.
      for (std::size_t k = 0; k < take.size() && total > budget_left; ++k) {
        const long cut = std::min(take[k], total - budget_left);
        take[k] -= cut;
        total -= cut;
      }
      rec.treatments = total;
      rec.utility = pool.treat(take, utility);
      budget_left -= total;
      result.treated += total;
      result.total_utility += rec.utility;
    }
    result.steps.push_back(std::move(rec));
  }
  return result;
}

}  // namespace alloctime
