#include "alloctime/commands.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "alloctime/agents.hpp"
#include "alloctime/one_time.hpp"
#include "alloctime/oracle.hpp"
#include "alloctime/over_time.hpp"

namespace alloctime {

RunConfig resolve_config(const std::optional<std::string>& file, const Overrides& o) {
  if (!file) throw ConfigError("--config: missing required option");
  auto j = read_json_file(*file);
  if (!j.is_object()) throw ConfigError("<root>: expected an object");
  if (o.seed) j["seed"] = *o.seed;
  if (o.budget) j["budget_fraction"] = *o.budget;
  if (o.horizon) j["horizon"] = *o.horizon;
  if (o.grid_size) j["grid_size"] = *o.grid_size;
  if (o.convention) j["posterior_convention"] = *o.convention;
  return parse_config(j);
}

std::string hash_line(const RunConfig& cfg) { return "# config_hash=" + config_hash(cfg); }

FailureFractions parse_failure_fractions(std::istream& in, FractionKind kind) {
  std::map<long, double> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected step,fraction");
    }
    long step;
    double frac;
    try {
      std::size_t used = 0;
      step = std::stol(a, &used);
      frac = std::stod(b);
    } catch (const std::exception&) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw ConfigError("line " + std::to_string(lineno) + ": not a number");
    }
    if (!(frac >= 0.0 && frac <= 1.0)) {
      throw ConfigError("line " + std::to_string(lineno) + ": fraction outside [0,1]");
    }
    if (!rows.emplace(step, frac).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate step index");
    }
  }
  if (rows.empty()) throw ConfigError("failure fractions: no rows");
  if (!rows.count(1) || !rows.count(2)) throw ConfigError("failure fractions: steps 1 and 2 required");
  FailureFractions f;
  f.f1 = rows[1];
  f.f2 = kind == FractionKind::marginal ? rows[2] : rows[2] - rows[1];
  if (f.f2 < 0.0) throw DomainError("cumulative failure fractions must not decrease");
  return f;
}

RawMoments moments_from_fractions(const FailureFractions& f) {
  // E[p] fail at step 1; E[p(1-p)] fail at step 2.
  return {f.f1, f.f1 - f.f2};
}

nlohmann::json estimate_prior_report(const FailureFractions& f) {
  const auto m = moments_from_fractions(f);
  const auto prior = estimate_beta_prior(m.m0, m.m1);
  const auto& b = prior.as_beta();
  return {{"m0", m.m0},
          {"m1", m.m1},
          {"alpha", b.alpha},
          {"beta", b.beta},
          {"mean", prior.mean()},
          {"reference", {{"alpha", 0.028}, {"beta", 0.35}}}};
}

void write_rank_risk(const RunConfig& cfg, const RankRiskOptions& opt, std::ostream& csv) {
  if (opt.t_max < 1) throw ConfigError("--t-max: must be at least 1");
  const auto model = cfg.model();
  csv << hash_line(cfg) << "\n";
  csv << "t,risk_mc,stderr,risk_approx,delta,population_effect,observation_effect,lhs,rhs\n";
  csv << std::setprecision(10);
  ApproxOptions approx;
  approx.convention = cfg.convention;
  for (int t = 1; t <= opt.t_max; ++t) {
    RankingMCOptions mc;
    mc.n_agents = opt.agents;
    mc.n_pairs = opt.pairs;
    mc.seed = cfg.seed;
    mc.ties = opt.ties;
    mc.convention = cfg.convention;
    const auto r = ranking_risk_mc(cfg.prior, model, t, mc);
    const auto a = ranking_risk_approx(cfg.prior, model, t, approx);
    const auto d = delta_ranking_risk(cfg.prior, model, t, approx);
    const auto c = thm31_condition(cfg.prior, model, t, opt.thm31, cfg.convention);
    csv << t << ',' << r.value << ',' << r.std_error << ',' << a.value << ',' << d.delta << ','
        << d.population_effect << ',' << d.observation_effect << ',' << c.lhs << ',' << c.rhs
        << "\n";
  }
}

namespace {

// G for Beta(1, b) priors with b >= 1, the family the bounds are stated for.
std::optional<double> decay_rate(const Prior& prior) {
  if (!prior.is_beta()) return std::nullopt;
  const auto& b = prior.as_beta();
  if (b.alpha != 1.0 || b.beta < 1.0) return std::nullopt;
  return b.beta - 1.0;
}

}  // namespace

nlohmann::json run_one_time(const RunConfig& cfg, std::ostream& csv) {
  const auto utility = cfg.utility();
  CohortDynamics dyn(cfg.prior, cfg.model(), cfg.horizon, cfg.convention, utility);
  const BudgetSpec budget(cfg.budget_fraction);
  const auto sweep = best_one_time(dyn, budget);

  std::optional<TStar> ts;
  const auto G = decay_rate(cfg.prior);
  if (G && cfg.gamma > 1.0 && cfg.budget_fraction < 1.0) {
    ts = t_star_fully_effective(cfg.horizon, *G, cfg.gamma, budget);
  }
  csv << hash_line(cfg) << "\n";
  csv << "t,welfare_per_capita,threshold_k,partial_fraction,t_star\n";
  csv << std::setprecision(12);
  for (const auto& r : sweep.curve) {
    csv << r.t << ',' << r.welfare_per_capita << ',' << r.threshold_k << ',' << r.partial_fraction
        << ',';
    if (ts) csv << ts->value;
    else csv << "nan";
    csv << "\n";
  }
  nlohmann::json summary = {{"t_opt", sweep.t_opt},
                            {"welfare_per_capita", sweep.curve[sweep.t_opt - 1].welfare_per_capita},
                            {"config_hash", config_hash(cfg)}};
  if (ts) {
    summary["t_star"] = ts->value;
    summary["t_star_vacuous"] = ts->vacuous;
  } else {
    summary["t_star"] = nullptr;
  }
  if (G && cfg.gamma == 1.0 && cfg.utility_kind == UtilityKind::FullyEffective &&
      cfg.horizon >= 2) {
    summary["appendix_c_sign"] = appendix_c_sign(*G, cfg.horizon);
    summary["u22_minus_u11"] = dyn.value(2, 2) - dyn.value(1, 1);
  }
  return summary;
}

nlohmann::json run_over_time(const RunConfig& cfg, std::ostream* trace) {
  const auto utility = cfg.utility();
  CohortDynamics dyn(cfg.prior, cfg.model(), cfg.horizon, cfg.convention, utility);
  const auto sol = solve_optimal(dyn, BudgetSpec(cfg.budget_fraction));
  if (trace) {
    *trace << hash_line(cfg) << "\n";
    *trace << "t,q_t,treated_mass\n" << std::setprecision(12);
    for (int t = 1; t <= cfg.horizon; ++t) {
      *trace << t << ',' << sol.schedule.q[t - 1] << ',' << sol.outcome.treated_mass[t - 1] << "\n";
    }
  }
  return {{"t_hat", sol.schedule.t_hat},
          {"q", sol.schedule.q},
          {"rho", sol.schedule.rho},
          {"utility_per_capita", sol.outcome.utility_per_capita},
          {"expenditure", sol.outcome.expenditure},
          {"budget_exhausted", sol.budget_exhausted},
          {"mean_treatment_time", mean_treatment_time(sol.outcome)},
          {"config_hash", config_hash(cfg)}};
}

OracleSuiteResult run_oracle_check(const nlohmann::json& suite, Exec exec) {
  if (!suite.is_object()) throw ConfigError("<root>: expected an object");
  for (auto it = suite.begin(); it != suite.end(); ++it) {
    if (it.key() != "budget_units" && it.key() != "tolerance" && it.key() != "instances") {
      throw ConfigError(it.key() + ": unknown key");
    }
  }
  if (!suite.contains("instances")) throw ConfigError("instances: missing required key");
  const auto& list = suite.at("instances");
  if (!list.is_array()) throw ConfigError("instances: expected an array");
  if (list.empty()) throw ConfigError("instances: empty instance list");
  int units = 100;
  if (suite.contains("budget_units")) {
    if (!suite.at("budget_units").is_number_integer()) {
      throw ConfigError("budget_units: expected an integer");
    }
    units = suite.at("budget_units").get<int>();
  }
  double tol = 2e-3;
  if (suite.contains("tolerance")) {
    if (!suite.at("tolerance").is_number()) throw ConfigError("tolerance: expected a number");
    tol = suite.at("tolerance").get<double>();
  }

  OracleSuiteResult out;
  out.all_within_tolerance = true;
  double max_gap = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto path = "instances[" + std::to_string(i) + "]";
    const auto cfg = parse_config(list[i], path);
    OracleConfig oc{units, cfg.horizon, cfg.seed};
    try {
      oc.validate();
    } catch (const DomainError& e) {
      throw ConfigError(path + ": " + e.what());
    }
    CohortDynamics dyn(cfg.prior, cfg.model(), cfg.horizon, cfg.convention, cfg.utility());
    const BudgetSpec budget(cfg.budget_fraction);
    const auto sol = solve_optimal(dyn, budget, exec);
    const auto brute = brute_force_over_time(dyn, budget, oc, exec);
    const double gap = brute.utility_per_capita - sol.outcome.utility_per_capita;
    // The oracle may trail the solver by discretization slack but must
    // never beat it.
    const bool ok = gap <= 1e-9 && -gap <= tol;
    out.all_within_tolerance = out.all_within_tolerance && ok;
    max_gap = std::max(max_gap, std::abs(gap));
    rows.push_back({{"horizon", cfg.horizon},
                    {"budget_fraction", cfg.budget_fraction},
                    {"solver_utility", sol.outcome.utility_per_capita},
                    {"oracle_utility", brute.utility_per_capita},
                    {"oracle_split", brute.split},
                    {"gap", gap},
                    {"within_tolerance", ok}});
  }
  out.report = {{"instances", rows},
                {"max_gap", max_gap},
                {"all_within_tolerance", out.all_within_tolerance}};
  return out;
}

void write_simulation(const RunConfig& cfg, std::size_t agents, std::ostream& csv) {
  if (agents < 1) throw ConfigError("--agents: must be at least 1");
  const auto model = cfg.model();
  CohortDynamics dyn(cfg.prior, model, cfg.horizon, cfg.convention, std::nullopt);
  AgentPool pool(cfg.prior, model, agents, cfg.seed, cfg.convention);
  const auto res = mc_simulate(pool, nullptr, nullptr, cfg.horizon);
  csv << hash_line(cfg) << "\n";
  csv << "t,k,count,mc_fraction,continuum_mass\n" << std::setprecision(10);
  for (const auto& step : res.steps) {
    const auto& table = dyn.untreated(step.t);
    for (int k = 0; k <= step.t; ++k) {
      const long c = step.active_by_y[k];
      csv << step.t << ',' << k << ',' << c << ','
          << static_cast<double>(c) / static_cast<double>(agents) << ',' << table.masses[k] << "\n";
    }
  }
}

}  // namespace alloctime
