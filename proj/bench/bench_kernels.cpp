// Serial reference against the OpenMP path for each parallel kernel.
#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "alloctime/dynamics.hpp"
#include "alloctime/oracle.hpp"
#include "alloctime/over_time.hpp"
#include "alloctime/ranking.hpp"

using namespace alloctime;

namespace {

double best_of(int reps, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %9.4f s   parallel %9.4f s   speedup %5.2fx\n", name, serial, parallel,
              serial / parallel);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  const Prior prior = Prior::beta(0.028, 0.35);
  const ObservationModel model(1.0);

  const int T = 14;
  const auto u = UtilityFunction::fully_effective(T);
  report("cohort dynamics (T=14)",
         best_of(3, [&] { CohortDynamics(prior, model, T, Convention::appendix_c, u, Exec::serial); }),
         best_of(3, [&] { CohortDynamics(prior, model, T, Convention::appendix_c, u, Exec::parallel); }));

  const CohortDynamics dyn(prior, model, T, Convention::appendix_c, u);
  const BudgetSpec b(0.1);
  report("solve_optimal (T=14)", best_of(3, [&] { solve_optimal(dyn, b, Exec::serial); }),
         best_of(3, [&] { solve_optimal(dyn, b, Exec::parallel); }));

  const int To = 4;
  const CohortDynamics small(Prior::uniform(), model, To, Convention::appendix_c,
                             UtilityFunction::fully_effective(To));
  const OracleConfig oc{200, To, 1};
  report("brute force (T=4, 200 units)",
         best_of(2, [&] { brute_force_over_time(small, b, oc, Exec::serial); }),
         best_of(2, [&] { brute_force_over_time(small, b, oc, Exec::parallel); }));

  ApproxOptions s, p;
  s.exec = Exec::serial;
  report("ranking approx (t=5)",
         best_of(2, [&] { ranking_risk_approx(Prior::uniform(), model, 5, s); }),
         best_of(2, [&] { ranking_risk_approx(Prior::uniform(), model, 5, p); }));

  RankingMCOptions ms, mp;
  ms.n_agents = mp.n_agents = 200000;
  ms.n_pairs = mp.n_pairs = 2000000;
  ms.exec = Exec::serial;
  report("ranking MC pairs (t=5)",
         best_of(2, [&] { ranking_risk_mc(Prior::uniform(), model, 5, ms); }),
         best_of(2, [&] { ranking_risk_mc(Prior::uniform(), model, 5, mp); }));
  return 0;
}
