#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "alloctime/commands.hpp"

using namespace alloctime;

namespace {

constexpr int kConfigError = 2;
constexpr int kDomainError = 3;
constexpr int kCheckFailed = 4;

struct Output {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = &std::cout;
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file = std::make_unique<std::ofstream>(path);
    if (!*file) throw ConfigError(path + ": cannot open for writing");
    stream = file.get();
  }
};

void add_common(CLI::App* cmd, std::optional<std::string>& config, std::string& out,
                Overrides& o) {
  cmd->add_option("--config", config, "JSON run configuration");
  cmd->add_option("--out", out, "output path (default stdout)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--budget", o.budget, "budget fraction B/N");
  cmd->add_option("--horizon", o.horizon, "horizon T");
  cmd->add_option("--grid-size", o.grid_size, "grid cells for grid-based checks");
  cmd->add_option("--convention", o.convention, "appendix_c or section_5_3")
      ->check(CLI::IsMember({"appendix_c", "section_5_3"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted allocation over time under Bernoulli observations"};
  app.require_subcommand(1);

  std::optional<std::string> config;
  std::string out;
  Overrides overrides;

  auto* est = app.add_subcommand("estimate-prior", "fit a Beta prior to failure fractions");
  std::string csv_path;
  std::string kind = "marginal";
  est->add_option("csv", csv_path, "CSV of step,fraction rows")->required();
  est->add_option("--fractions", kind, "marginal or cumulative")
      ->check(CLI::IsMember({"marginal", "cumulative"}));
  est->add_option("--out", out, "output path (default stdout)");

  auto* rank = app.add_subcommand("rank-risk", "ranking risk over t");
  add_common(rank, config, out, overrides);
  RankRiskOptions rank_opt;
  std::string ties = "strict";
  rank->add_option("--t-max", rank_opt.t_max, "last time step");
  rank->add_option("--agents", rank_opt.agents, "agents in the Monte Carlo population");
  rank->add_option("--pairs", rank_opt.pairs, "pairs drawn per time step");
  rank->add_option("--alpha-cutoff", rank_opt.thm31.alpha_cutoff, "kernel cutoff in (0,1)");
  rank->add_option("--lipschitz-inv", rank_opt.thm31.lipschitz_inv, "Lipschitz constant of the inverse map");
  rank->add_option("--epsilon", rank_opt.thm31.epsilon, "observation noise floor");
  rank->add_option("--ties", ties, "strict or half")->check(CLI::IsMember({"strict", "half"}));

  auto* one = app.add_subcommand("one-time", "welfare of spending the budget at each t");
  add_common(one, config, out, overrides);
  std::string summary_path;
  one->add_option("--summary", summary_path, "JSON summary path (default stderr)");

  auto* over = app.add_subcommand("over-time", "optimal allocation over time");
  add_common(over, config, out, overrides);
  std::string trace_path;
  over->add_option("--trace", trace_path, "CSV trace of q(t) and treated mass");

  auto* oracle = app.add_subcommand("oracle-check", "solver against brute-force enumeration");
  std::string suite_path;
  oracle->add_option("--config", suite_path, "suite JSON with an instances array")->required();
  oracle->add_option("--out", out, "output path (default stdout)");

  auto* sim = app.add_subcommand("simulate", "finite population next to the continuum masses");
  add_common(sim, config, out, overrides);
  std::size_t agents = 100000;
  sim->add_option("--agents", agents, "number of agents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*est) {
      std::ifstream in(csv_path);
      if (!in) throw ConfigError(csv_path + ": cannot open");
      const auto f = parse_failure_fractions(
          in, kind == "marginal" ? FractionKind::marginal : FractionKind::cumulative);
      Output o(out);
      *o.stream << estimate_prior_report(f).dump(2) << "\n";
    } else if (*rank) {
      rank_opt.ties = ties == "half" ? TiePolicy::half : TiePolicy::strict;
      const auto cfg = resolve_config(config, overrides);
      Output o(out.empty() && cfg.out ? *cfg.out : out);
      write_rank_risk(cfg, rank_opt, *o.stream);
    } else if (*one) {
      const auto cfg = resolve_config(config, overrides);
      Output o(out.empty() && cfg.out ? *cfg.out : out);
      const auto summary = run_one_time(cfg, *o.stream);
      if (summary_path.empty()) {
        std::cerr << summary.dump(2) << "\n";
      } else {
        Output s(summary_path);
        *s.stream << summary.dump(2) << "\n";
      }
    } else if (*over) {
      const auto cfg = resolve_config(config, overrides);
      const std::string tp = trace_path.empty() && cfg.trace ? *cfg.trace : trace_path;
      std::unique_ptr<Output> trace;
      if (!tp.empty()) trace = std::make_unique<Output>(tp);
      const auto result = run_over_time(cfg, trace ? trace->stream : nullptr);
      Output o(out.empty() && cfg.out ? *cfg.out : out);
      *o.stream << result.dump(2) << "\n";
    } else if (*oracle) {
      const auto res = run_oracle_check(read_json_file(suite_path));
      Output o(out);
      *o.stream << res.report.dump(2) << "\n";
      if (!res.all_within_tolerance) return kCheckFailed;
    } else if (*sim) {
      const auto cfg = resolve_config(config, overrides);
      Output o(out.empty() && cfg.out ? *cfg.out : out);
      write_simulation(cfg, agents, *o.stream);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kDomainError;
  }
  return 0;
}
