#include <doctest.h>

#include <cmath>
#include <numeric>

#include "alloctime/agents.hpp"
#include "alloctime/one_time.hpp"

using namespace alloctime;

namespace {

const ObservationModel kLinear(1.0);

CohortDynamics fully_effective(const Prior& prior, int T, double gamma = 1.0) {
  return CohortDynamics(prior, ObservationModel(gamma), T, Convention::appendix_c,
                        UtilityFunction::fully_effective(T));
}

}  // namespace

TEST_CASE("budget spec") {
  CHECK_THROWS_AS(BudgetSpec(0.0), DomainError);
  CHECK_THROWS_AS(BudgetSpec(1.5), DomainError);
  CHECK(BudgetSpec::from_counts(10, 100).fraction == doctest::Approx(0.1));
  CHECK(BudgetSpec(std::exp(-1.0)).log_inverse() == doctest::Approx(1.0));
}

TEST_CASE("uniform prior U_1^1 at T=6") {
  const auto dyn = fully_effective(Prior::uniform(), 6);
  CHECK(dyn.value(1, 1) == doctest::Approx(20.0 / 21.0).epsilon(1e-12));
}

TEST_CASE("budget covering the active pool treats everyone") {
  const auto dyn = fully_effective(Prior::beta(0.5, 2), 8);
  const auto u = UtilityFunction::fully_effective(8);
  for (int t = 1; t <= 8; ++t) {
    const auto r = one_time_welfare(dyn, BudgetSpec(1.0), t);
    const double s = survival_exponent(t, Convention::appendix_c);
    const PopulationDensity base(Prior::beta(0.5, 2), kLinear);
    const PopulationDensity pop(Prior::beta(0.5, 2), kLinear, Tilt{s, 0.0, 0.0});
    const double mass = base.expect([&](double p) { return std::pow(1.0 - p, s); });
    CHECK(r.active_mass == doctest::Approx(mass).epsilon(1e-10));
    CHECK(r.treated_mass == doctest::Approx(r.active_mass).epsilon(1e-12));
    CHECK(r.threshold_k == 0);
    const double expect = mass * pop.expect([&](double p) { return u(t, p); });
    CHECK(r.welfare_per_capita == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("budget is exhausted whenever the pool allows") {
  const auto dyn = fully_effective(Prior::beta(0.3, 1.5), 10);
  for (double b : {0.01, 0.1, 0.4, 0.9}) {
    for (int t = 1; t <= 10; ++t) {
      const auto r = one_time_welfare(dyn, BudgetSpec(b), t);
      CHECK(std::abs(r.treated_mass - std::min(b, r.active_mass)) < 1e-9);
      CHECK(r.partial_fraction >= 0.0);
      CHECK(r.partial_fraction <= 1.0);
      CHECK(r.welfare_per_capita >= 0.0);
    }
  }
}

TEST_CASE("appendix C sign agrees with quadrature") {
  CHECK(appendix_c_sign(2, 6) == 0);
  CHECK(appendix_c_sign(3, 6) == 1);
  CHECK(appendix_c_sign(1, 6) == -1);
  for (double G : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0}) {
    for (int T : {5, 6, 8, 12}) {
      const double d = appendix_c_difference(G, T);
      const int s = appendix_c_sign(G, T);
      CAPTURE(G);
      CAPTURE(T);
      CAPTURE(d);
      if (s == 0) {
        CHECK(std::abs(d) < 1e-8);
      } else {
        CHECK(std::abs(d) > 1e-10);
        CHECK((d > 0 ? 1 : -1) == s);
      }
    }
  }
}

TEST_CASE("appendix C welfare difference is b (U_2^2 - U_1^1)") {
  for (double G : {0.0, 1.0, 3.0}) {
    const auto dyn = fully_effective(Prior::beta(1.0, G + 1.0), 6);
    const double n22 = dyn.untreated(2).masses[2];
    const double b = 0.5 * n22;
    const auto w1 = one_time_welfare(dyn, BudgetSpec(b), 1);
    const auto w2 = one_time_welfare(dyn, BudgetSpec(b), 2);
    const double diff = w2.welfare_per_capita - w1.welfare_per_capita;
    CHECK(diff == doctest::Approx(b * (dyn.value(2, 2) - dyn.value(1, 1))).epsilon(1e-10));
    CHECK((diff > 0 ? 1 : -1) == appendix_c_sign(G, 6));
  }
}

TEST_CASE("t* closed form") {
  const auto s = t_star_fully_effective(100, 0.0, 2.0, BudgetSpec(0.1));
  CHECK(s.value == doctest::Approx(50.0 + 1.625 * (3.0 * std::log(10.0) + 1.0)));
  CHECK(s.value == doctest::Approx(62.85).epsilon(1e-3));
  CHECK_FALSE(s.vacuous);

  const auto one = t_star_fully_effective(100, 0.0, 2.0, BudgetSpec(1.0));
  CHECK(one.value == doctest::Approx(50.0 + 1.625));

  CHECK(t_star_fully_effective(20, 1.0, 2.0, BudgetSpec(0.1)).value >
        t_star_fully_effective(20, 0.0, 2.0, BudgetSpec(0.1)).value);
  CHECK(t_star_fully_effective(20, 1.0, 2.0, BudgetSpec(0.3)).value <
        t_star_fully_effective(20, 1.0, 2.0, BudgetSpec(0.1)).value);
  CHECK(t_star_fully_effective(10, 0.0, 2.0, BudgetSpec(0.01)).vacuous);

  CHECK_THROWS_WITH_AS(t_star_fully_effective(10, 0.0, 1.0, BudgetSpec(0.1)),
                       "bound requires γ > 1", DomainError);
}

TEST_CASE("t* bounds the empirical optimum") {
  for (double gamma : {1.5, 2.0, 3.0}) {
    for (double G : {0.0, 1.0, 3.0}) {
      for (int T : {10, 20, 40}) {
        const auto dyn = fully_effective(Prior::beta(1.0, G + 1.0), T, gamma);
        for (double b : {0.05, 0.2}) {
          const auto sweep = best_one_time(dyn, BudgetSpec(b));
          const auto ts = t_star_fully_effective(T, G, gamma, BudgetSpec(b));
          CAPTURE(gamma);
          CAPTURE(G);
          CAPTURE(T);
          CAPTURE(b);
          CHECK(sweep.t_opt <= std::ceil(ts.value));
        }
      }
    }
  }
}

TEST_CASE("threshold bound") {
  CHECK(l_t_upper_bound(1.0, BudgetSpec(1.0)) == 0.0);
  CHECK(l_t_upper_bound(1.0, BudgetSpec(std::exp(-1.0))) == doctest::Approx(2.0));
  CHECK(l_t_upper_bound(2.0, BudgetSpec(0.1)) == doctest::Approx(6.91).epsilon(1e-3));

  const Prior priors[] = {Prior::uniform(), Prior::beta(1, 3), Prior::beta(1, 1.5)};
  for (const auto& prior : priors) {
    REQUIRE(check_G_decaying(prior, 50.0).holds);
    for (double gamma : {1.0, 2.0}) {
      const auto dyn = fully_effective(prior, 12, gamma);
      for (double b : {0.05, 0.2, std::exp(-1.0), 1.0}) {
        const double bound = l_t_upper_bound(gamma, BudgetSpec(b));
        for (int t = 1; t <= 12; ++t) {
          CHECK(one_time_welfare(dyn, BudgetSpec(b), t).threshold_k <= bound + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("degenerate prior welfare decreases strictly") {
  const int T = 8;
  const auto dyn = fully_effective(Prior::point(0.3), T);
  for (double b : {0.05, 0.5, 1.0}) {
    const auto sweep = best_one_time(dyn, BudgetSpec(b));
    for (int t = 2; t <= T; ++t) {
      CHECK(sweep.curve[t - 1].welfare_per_capita < sweep.curve[t - 2].welfare_per_capita);
    }
    CHECK(sweep.t_opt == 1);
  }
}

TEST_CASE("full budget is best spent at t=1") {
  for (const auto& prior : {Prior::uniform(), Prior::beta(0.2, 1), Prior::beta(2, 5)}) {
    for (int T : {4, 10}) {
      CHECK(best_one_time(fully_effective(prior, T), BudgetSpec(1.0)).t_opt == 1);
    }
  }
}

TEST_CASE("appendix C instance with G=3 prefers waiting") {
  const auto dyn = fully_effective(Prior::beta(1, 4), 6);
  const double b = 0.5 * dyn.untreated(2).masses[2];
  const auto sweep = best_one_time(dyn, BudgetSpec(b));
  CHECK(sweep.curve[1].welfare_per_capita > sweep.curve[0].welfare_per_capita);
}

TEST_CASE("sweep is identical on both paths") {
  const auto dyn = fully_effective(Prior::beta(0.3, 2), 12);
  const auto s = best_one_time(dyn, BudgetSpec(0.1), Exec::serial);
  const auto p = best_one_time(dyn, BudgetSpec(0.1), Exec::parallel);
  CHECK(s.t_opt == p.t_opt);
  for (int t = 0; t < 12; ++t) CHECK(s.curve[t].welfare_per_capita == p.curve[t].welfare_per_capita);
}

TEST_CASE("deferral condition") {
  const int T = 50;
  const auto u = UtilityFunction::fully_effective(T);
  const BudgetSpec b(0.5);
  const auto early = general_deferral_condition(1, T, 2.0, 0.0, u, b);
  CHECK(early.warmup_t_star == doctest::Approx(3.0 * std::log(2.0)));
  CHECK(early.in_warmup);
  CHECK(early.condition_holds);
  CHECK(early.lhs == doctest::Approx(T - 2));

  const auto late = general_deferral_condition(T - 2, T, 2.0, 0.0, u, b);
  CHECK_FALSE(late.in_warmup);
  CHECK(late.lhs == doctest::Approx(1.0));
  CHECK_FALSE(late.condition_holds);

  CHECK_THROWS_AS(general_deferral_condition(1, T, 1.0, 0.0, u, b), DomainError);
  CHECK_THROWS_AS(general_deferral_condition(T, T, 2.0, 0.0, u, b), DomainError);

  const UtilityFunction partial(UtilityKind::PartialSuccess, T, 0.5);
  const auto r = general_deferral_condition(10, T, 2.0, 1.0, partial, b);
  CHECK(r.lhs == doctest::Approx(0.5 * (T - 11)));
}

TEST_CASE("continuum welfare matches the finite population") {
  const int T = 6;
  const double b = 0.15;
  const std::size_t N = 100000;
  const Prior prior = Prior::beta(0.5, 1.5);
  const auto u = UtilityFunction::fully_effective(T);
  const auto dyn = fully_effective(prior, T);
  for (int t : {1, 3}) {
    const double expect = one_time_welfare(dyn, BudgetSpec(b), t).welfare_per_capita;
    const auto policy = one_time_policy(t);
    std::vector<double> reps;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      AgentPool pool(prior, kLinear, N, seed);
      const auto run = mc_simulate(pool, &u, &policy, T, static_cast<long>(b * N));
      reps.push_back(run.total_utility / N);
    }
    const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / reps.size();
    double ss = 0.0;
    for (double r : reps) ss += (r - mean) * (r - mean);
    const double se = std::sqrt(ss / (reps.size() - 1) / reps.size());
    CAPTURE(t);
    CAPTURE(mean);
    CAPTURE(expect);
    CHECK(std::abs(mean - expect) < 3.0 * se + 1e-4);
  }
}
