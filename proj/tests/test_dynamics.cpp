#include <doctest.h>

#include <cmath>

#include <omp.h>

#include "alloctime/agents.hpp"
#include "alloctime/dynamics.hpp"

using namespace alloctime;
using doctest::Approx;

namespace {

double beta_fn(double a, double b) { return std::exp(log_beta_function(a, b)); }

const ObservationModel kId(1.0);

}  // namespace

TEST_CASE("quadrature integrates polynomials under Beta densities") {
  for (auto [a, b] : {std::pair{2.0, 3.0}, {1.0, 1.0}, {0.3, 0.7}, {0.028, 0.35}, {5.0, 0.5}}) {
    const PopulationDensity d(Prior::beta(a, b), kId);
    CAPTURE(a);
    CAPTURE(b);
    CHECK(d.expect([](double) { return 1.0; }) == Approx(1.0).epsilon(1e-12));
    CHECK(d.mean() == Approx(a / (a + b)).epsilon(1e-10));
    for (int deg : {7, 20, 50}) {
      const double exact = beta_fn(a + deg, b) / beta_fn(a, b);
      const double got = d.expect([deg](double p) { return std::pow(p, deg); });
      CHECK(std::abs(got - exact) <= 1e-10 * exact);
    }
  }
  const PopulationDensity two_p(Prior::beta(2.0, 1.0), kId);
  CHECK(posterior_expect(two_p, [](double p) { return 1 - std::pow(1 - p, 5); }) ==
        Approx(20.0 / 21.0).epsilon(1e-12));
}

TEST_CASE("Gauss-Legendre rule") {
  const auto& r = gauss_legendre(64);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    s += r.weights[i];
    CHECK(r.nodes[i] + r.complements[i] == Approx(1.0).epsilon(1e-15));
  }
  CHECK(s == Approx(1.0).epsilon(1e-14));
  const auto& big = gauss_legendre(2048);
  double m = 0.0;
  for (std::size_t i = 0; i < big.nodes.size(); ++i) m += big.weights[i] * std::pow(big.nodes[i], 99);
  CHECK(m == Approx(0.01).epsilon(1e-13));
}

TEST_CASE("survival update") {
  const PopulationDensity uni(Prior::uniform(), kId);
  const auto next = survival_update(uni);
  CHECK(next.active_mass() == Approx(0.5));
  CHECK(next.mean() == Approx(1.0 / 3.0).epsilon(1e-12));
  const auto cf = next.closed_form();
  REQUIRE(cf);
  CHECK(cf->alpha == 1.0);
  CHECK(cf->beta == 2.0);

  const auto nels = survival_update(PopulationDensity(Prior::beta(0.028, 0.35), kId));
  CHECK(nels.closed_form()->alpha == 0.028);
  CHECK(nels.closed_form()->beta == Approx(1.35));
  CHECK(nels.mean() == Approx(0.028 / 1.378).epsilon(1e-9));

  const PopulationDensity near_zero(Prior::grid({1e-9, 2e-9}, {0.5, 0.5}), kId);
  CHECK(survival_update(near_zero).active_mass() == Approx(1.0).epsilon(1e-8));

  const PopulationDensity dead(Prior::point(1.0), kId);
  const auto after = survival_update(dead);
  CHECK(after.active_mass() == 0.0);
  CHECK_THROWS_WITH_AS(survival_update(after), "population extinct", DomainError);
}

TEST_CASE("posterior kernels") {
  const double a = 1.7, b = 2.3;
  const auto pr = Prior::beta(a, b);
  auto p10 = posterior(pr, kId, {1, 0});
  CHECK(p10.closed_form()->alpha == a);
  CHECK(p10.closed_form()->beta == b + 1);
  auto p21 = posterior(pr, kId, {2, 1});
  CHECK(p21.closed_form()->alpha == a + 1);
  CHECK(p21.closed_form()->beta == b + 2);
  auto alt = posterior(pr, kId, {2, 1}, Convention::section_5_3);
  CHECK(alt.closed_form()->beta == b + 3);

  const auto u11 = posterior(Prior::uniform(), kId, {1, 1});
  CHECK(u11.mean() == Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(u11.expect([](double p) { return p * p; }) == Approx(0.5).epsilon(1e-12));
  CHECK(u11.active_mass() == Approx(0.5));

  CHECK_THROWS_AS(posterior(pr, kId, {2, 3}), DomainError);
  CHECK_THROWS_WITH_AS(posterior(Prior::point(0.0), kId, {2, 1}), "degenerate posterior",
                       DomainError);
  // gamma > 1 keeps a ptilde^k factor that does not fold into a Beta.
  CHECK_FALSE(posterior(pr, ObservationModel(2.0), {2, 1}).closed_form());
  CHECK(posterior(pr, ObservationModel(2.0), {2, 0}).closed_form()->beta == Approx(b + 1 + 4));
}

TEST_CASE("posterior moments match the conjugate Beta") {
  for (auto [a, b] : {std::pair{1.0, 1.0}, {0.028, 0.35}, {1.0, 20.0}, {0.2, 1.0}, {2.5, 0.7}}) {
    const auto pr = Prior::beta(a, b);
    for (int t = 1; t <= 10; ++t) {
      for (int k = 0; k <= t; ++k) {
        const auto post = posterior(pr, kId, {t, k});
        const double ap = a + k, bp = b + 2 * t - k - 1;
        const double mean = ap / (ap + bp);
        const double var = ap * bp / ((ap + bp) * (ap + bp) * (ap + bp + 1));
        CAPTURE(a);
        CAPTURE(t);
        CAPTURE(k);
        CHECK(std::abs(post.mean() - mean) <= 1e-8);
        CHECK(std::abs(post.variance() - var) <= 1e-8);
      }
    }
  }
}

TEST_CASE("cohort stats") {
  const auto s = cohort_stats(Prior::point(0.5), kId, {1, 0});
  CHECK(s.mu == 0.5);
  CHECK(s.stilde == 0.25);
  CHECK(cohort_stats(Prior::uniform(), kId, {1, 1}).mu == Approx(2.0 / 3.0));
  for (int t = 1; t <= 6; ++t) {
    for (int k = 0; k <= t; ++k) {
      const auto c = cohort_stats(Prior::beta(0.4, 1.3), ObservationModel(1.5), {t, k});
      CHECK(c.stilde <= 1 - c.mu + 1e-15);
    }
  }
}

TEST_CASE("initial cohorts") {
  for (double G : {0.0, 2.0, 5.0}) {
    const auto c = initial_cohorts(Prior::beta(1, G + 1), kId);
    CHECK(c.t == 1);
    CHECK(c.masses[0] == Approx((G + 1) / (G + 2)).epsilon(1e-12));
    CHECK(c.masses[1] == Approx(1 / (G + 2)).epsilon(1e-12));
  }
  const auto zero = initial_cohorts(Prior::point(0.0), kId);
  CHECK(zero.masses[0] == 1.0);
  CHECK(zero.masses[1] == 0.0);
  const auto g2 = initial_cohorts(Prior::point(0.5), ObservationModel(2.0));
  CHECK(g2.masses[1] == Approx(0.75));
  // A failure round before the first observation removes mass.
  CHECK(initial_cohorts(Prior::uniform(), kId, Convention::section_5_3).total() == Approx(0.5));
}

TEST_CASE("trajectory recursion") {
  const CohortDynamics half(Prior::point(0.5), kId, 4);
  CohortTable init{1, {0.5, 0.5}};
  const auto tr = simulate_trajectory(half, 1, init, {2, 3, 4, 5});
  REQUIRE(tr.tables.size() == 4);
  CHECK(tr.tables[1].masses[0] == Approx(0.125));
  CHECK(tr.tables[1].masses[1] == Approx(0.25));
  CHECK(tr.tables[1].masses[2] == Approx(0.125));
  CHECK(threshold_slice(tr, {2, 3, 4, 5}) == std::vector<double>{0, 0, 0, 0});

  const auto zero = simulate_trajectory(half, 1, CohortTable{1, {0, 0}}, {0, 1, 1, 1});
  for (const auto& t : zero.tables) CHECK(t.total() == 0.0);

  const CohortDynamics beta(Prior::beta(0.5, 2.0), kId, 5);
  const auto all = simulate_trajectory(beta, 1, beta.untreated(1), {0, 0, 0, 0, 0});
  CHECK(all.treated_mass[0] == Approx(1.0));
  for (std::size_t i = 1; i < all.tables.size(); ++i) CHECK(all.tables[i].total() == 0.0);

  CHECK_THROWS_AS(simulate_trajectory(beta, 1, beta.untreated(1), {1, 0, 1, 1, 1}), DomainError);
  CHECK_THROWS_AS(simulate_trajectory(beta, 1, beta.untreated(1), {1, 1}), DomainError);
  CHECK_THROWS_AS(simulate_trajectory(beta, 1, beta.untreated(1), {3, 3, 4, 5, 6}), DomainError);
}

TEST_CASE("untreated recursion reproduces the direct cohort masses") {
  for (auto conv : {Convention::appendix_c, Convention::section_5_3}) {
    const CohortDynamics dyn(Prior::beta(0.3, 1.2), ObservationModel(1.7), 8, conv);
    std::vector<int> none;
    for (int t = 1; t <= 8; ++t) none.push_back(t + 1);
    const auto tr = simulate_trajectory(dyn, 1, dyn.untreated(1), none);
    for (int t = 1; t <= 8; ++t) {
      for (int k = 0; k <= t; ++k) {
        CHECK(tr.tables[t - 1].masses[k] == Approx(dyn.untreated(t).masses[k]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("mass balance") {
  const CohortDynamics dyn(Prior::beta(0.2, 1.0), ObservationModel(2.0), 9);
  const std::vector<int> q = {2, 2, 3, 3, 3, 4, 5, 5, 6};
  const auto tr = simulate_trajectory(dyn, 1, dyn.untreated(1), q);
  for (std::size_t i = 0; i + 1 < tr.tables.size(); ++i) {
    const double lhs = tr.tables[i + 1].total() + tr.failed_mass[i] + tr.treated_mass[i];
    CHECK(lhs == Approx(tr.tables[i].total()).epsilon(1e-12));
    CHECK(std::abs(lhs - tr.tables[i].total()) <= 1e-9);
  }
}

TEST_CASE("expected utility monotone in y and t; mean monotone in t") {
  const std::vector<Prior> priors = {Prior::uniform(), Prior::beta(1, 3), Prior::beta(0.2, 1)};
  for (const auto& pr : priors) {
    for (double g : {1.0, 2.0}) {
      const int T = 9;
      const std::vector<UtilityFunction> kinds = {
          UtilityFunction::fully_effective(T), UtilityFunction(UtilityKind::RiskyProcedure, T, 0.7),
          UtilityFunction(UtilityKind::PartialSuccess, T, 0.5),
          UtilityFunction(UtilityKind::RiskReduction, T, 2.0)};
      for (const auto& u : kinds) {
        const CohortDynamics dyn(pr, ObservationModel(g), T, Convention::appendix_c, u);
        const std::string kind_name = to_string(u.kind());
        CAPTURE(kind_name);
        CAPTURE(g);
        for (int t = 1; t <= 8; ++t) {
          for (int k = 0; k <= t; ++k) {
            // Risk reduction is not monotone in p, so its cohort values
            // need not be monotone either.
            if (u.kind() != UtilityKind::RiskReduction) {
              if (k < t) CHECK(dyn.value(t, k + 1) >= dyn.value(t, k) - 1e-12);
              CHECK(dyn.value(t, k) >= dyn.value(t + 1, k) - 1e-12);
            }
            if (k + 1 <= t && t < T) CHECK(dyn.mu(t, k + 1) >= dyn.mu(t + 1, k + 1) - 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("risk reduction cohort values can rise with t") {
  const int T = 9;
  const CohortDynamics dyn(Prior::uniform(), kId, T, Convention::appendix_c,
                           UtilityFunction(UtilityKind::RiskReduction, T, 2.0));
  bool rises = false;
  for (int t = 1; t < 8; ++t)
    for (int k = 0; k <= t; ++k) rises = rises || dyn.value(t + 1, k) > dyn.value(t, k);
  CHECK(rises);
}

TEST_CASE("a positive observation is at least as informative as waiting") {
  const int T = 9;
  for (const auto& pr : {Prior::uniform(), Prior::beta(1, 3), Prior::beta(0.2, 1)}) {
    const auto u = UtilityFunction::fully_effective(T);
    const CohortDynamics dyn(pr, kId, T, Convention::appendix_c, u);
    for (int t = 1; t <= 8; ++t) {
      for (int k = 0; k <= t; ++k) {
        const auto post = posterior(pr, kId, {t, k});
        const double lhs = post.expect([&](double p) { return p * u(t, p); }) / post.mean();
        CHECK(lhs >= dyn.value(t + 1, k + 1) - 1e-12);
      }
    }
  }
}

TEST_CASE("serial and parallel dynamics agree bit for bit") {
  const auto u = UtilityFunction::fully_effective(7);
  const CohortDynamics a(Prior::beta(0.028, 0.35), kId, 7, Convention::appendix_c, u, Exec::serial);
  const CohortDynamics b(Prior::beta(0.028, 0.35), kId, 7, Convention::appendix_c, u,
                         Exec::parallel);
  for (int t = 1; t <= 7; ++t) {
    for (int k = 0; k <= t; ++k) {
      CHECK(a.stay(t, k) == b.stay(t, k));
      CHECK(a.up(t, k) == b.up(t, k));
      CHECK(a.value(t, k) == b.value(t, k));
      CHECK(a.untreated(t).masses[k] == b.untreated(t).masses[k]);
    }
  }
}

TEST_CASE("keyed RNG is order independent") {
  CHECK(keyed_bits(1, 2, 3, 4) == keyed_bits(1, 2, 3, 4));
  CHECK(keyed_bits(1, 2, 3, 4) != keyed_bits(1, 2, 3, 5));
  CHECK(keyed_bits(1, 2, 3, 4) != keyed_bits(2, 2, 3, 4));
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) s += keyed_uniform(9, i, 1, 0);
  CHECK(s / 100000 == Approx(0.5).epsilon(0.01));
  CHECK(sample_prior(Prior::point(0.3), 1, 1) == 0.3);
}

TEST_CASE("agent simulation is identical for any thread count") {
  auto run = [](int threads) {
    omp_set_num_threads(threads);
    AgentPool pool(Prior::beta(0.5, 1.5), ObservationModel(1.5), 20000, 42);
    const auto u = UtilityFunction::fully_effective(6);
    const auto pol = threshold_policy(3, {1, 2, 2, 3, 3, 4}, 0.25);
    return mc_simulate(pool, &u, &pol, 6, 3000);
  };
  const int saved = omp_get_max_threads();
  const auto a = run(1);
  const auto b = run(4);
  omp_set_num_threads(saved);
  CHECK(a.total_utility == b.total_utility);
  CHECK(a.treated == b.treated);
  CHECK(a.treated <= 3000);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].active_by_y == b.steps[i].active_by_y);
    CHECK(a.steps[i].failures == b.steps[i].failures);
  }
}

TEST_CASE("agent simulation: no failures when p = 0") {
  AgentPool pool(Prior::point(0.0), kId, 1000, 3);
  const auto r = mc_simulate(pool, nullptr, nullptr, 5);
  for (const auto& s : r.steps) {
    CHECK(s.failures == 0);
    CHECK(s.active_by_y[0] == 1000);
  }
}

TEST_CASE("first-round failures match the prior mean") {
  const std::size_t N = 1000000;
  AgentPool pool(Prior::beta(0.028, 0.35), kId, N, 11);
  const auto r = mc_simulate(pool, nullptr, nullptr, 2);
  const double m0 = 0.028 / 0.378;
  const double frac = static_cast<double>(r.steps[1].failures) / N;
  CHECK(std::abs(frac - m0) <= 3 * std::sqrt(m0 * (1 - m0) / N));
}

TEST_CASE("agent cohorts approach the continuum masses") {
  const auto pr = Prior::beta(0.6, 1.4);
  const ObservationModel m(1.3);
  const CohortDynamics dyn(pr, m, 3);
  for (std::size_t N : {10000u, 100000u, 1000000u}) {
    AgentPool pool(pr, m, N, 5);
    const auto r = mc_simulate(pool, nullptr, nullptr, 3);
    double worst = 0.0;
    for (int k = 0; k <= 3; ++k) {
      worst = std::max(worst, std::abs(static_cast<double>(r.steps[2].active_by_y[k]) / N -
                                       dyn.untreated(3).masses[k]));
    }
    CAPTURE(N);
    CHECK(worst <= 5.0 / std::sqrt(static_cast<double>(N)));
  }
}
