#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "alloctime/dynamics.hpp"
#include "alloctime/model.hpp"

namespace alloctime {

/// Malformed or incomplete configuration. The message starts with the
/// offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Prior prior = Prior::uniform();
  double gamma = 1.0;
  UtilityKind utility_kind = UtilityKind::FullyEffective;
  double utility_param = 1.0;
  int horizon = 10;
  double budget_fraction = 0.1;
  int grid_size = 64;
  std::uint64_t seed = 1;
  Convention convention = Convention::appendix_c;
  std::optional<std::string> out;
  std::optional<std::string> trace;

  ObservationModel model() const { return ObservationModel(gamma); }
  UtilityFunction utility() const { return UtilityFunction(utility_kind, horizon, utility_param); }
};

/// Validates every field; unknown keys and missing required keys ("prior",
/// "horizon") raise ConfigError.
RunConfig parse_config(const nlohmann::json& j, const std::string& path = "");
RunConfig load_config(const std::string& file);
nlohmann::json to_json(const RunConfig& cfg);
/// FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);
std::uint64_t fnv1a(const std::string& bytes);

nlohmann::json read_json_file(const std::string& file);

}  // namespace alloctime
