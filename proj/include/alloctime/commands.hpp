#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "alloctime/config.hpp"
#include "alloctime/ranking.hpp"

namespace alloctime {

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> budget;
  std::optional<int> horizon;
  std::optional<int> grid_size;
  std::optional<std::string> convention;
};

RunConfig resolve_config(const std::optional<std::string>& file, const Overrides& overrides);

enum class FractionKind { marginal, cumulative };

struct FailureFractions {
  double f1 = 0.0;  // failed before step 1
  double f2 = 0.0;  // failed between steps 1 and 2 (marginal)
};

/// Rows "step,fraction"; '#' comments and a non-numeric header are skipped.
FailureFractions parse_failure_fractions(std::istream& in, FractionKind kind);
/// Raw moments E[p], E[p^2] implied by the two failure fractions.
RawMoments moments_from_fractions(const FailureFractions& f);

nlohmann::json estimate_prior_report(const FailureFractions& f);

struct RankRiskOptions {
  int t_max = 10;
  std::size_t agents = 20000;
  std::size_t pairs = 200000;
  TiePolicy ties = TiePolicy::strict;
  Thm31Inputs thm31;
};

void write_rank_risk(const RunConfig& cfg, const RankRiskOptions& opt, std::ostream& csv);
/// Writes the welfare curve CSV and returns the summary.
nlohmann::json run_one_time(const RunConfig& cfg, std::ostream& csv);
/// Returns the schedule JSON; writes the per-t trace when `trace` is set.
nlohmann::json run_over_time(const RunConfig& cfg, std::ostream* trace);

struct OracleSuiteResult {
  nlohmann::json report;
  bool all_within_tolerance = false;
};
/// Suite: {"budget_units": n, "tolerance": x, "instances": [config, ...]}.
OracleSuiteResult run_oracle_check(const nlohmann::json& suite, Exec exec = Exec::parallel);

/// Untreated finite-N run next to the continuum cohort masses.
void write_simulation(const RunConfig& cfg, std::size_t agents, std::ostream& csv);

/// "# config_hash=..." header line.
std::string hash_line(const RunConfig& cfg);

}  // namespace alloctime
