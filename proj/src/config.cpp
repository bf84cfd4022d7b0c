#include "alloctime/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace alloctime {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown(const nlohmann::json& j, const std::string& path,
                    const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(join(path, it.key()) + ": unknown key");
  }
}

const nlohmann::json& require(const nlohmann::json& j, const std::string& path,
                              const std::string& key) {
  if (!j.contains(key)) throw ConfigError(join(path, key) + ": missing required key");
  return j.at(key);
}

double number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

long long integer(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<long long>();
}

std::string text(const nlohmann::json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Re-raises model-level precondition failures against the key that caused them.
template <class F>
auto at_key(const std::string& path, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Prior parse_prior(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const std::string family = text(require(j, path, "family"), join(path, "family"));
  if (family == "beta") {
    reject_unknown(j, path, {"family", "alpha", "beta"});
    const double a = number(require(j, path, "alpha"), join(path, "alpha"));
    const double b = number(require(j, path, "beta"), join(path, "beta"));
    return at_key(path, [&] { return Prior::beta(a, b); });
  }
  if (family == "grid") {
    reject_unknown(j, path, {"family", "points", "weights"});
    auto pts = numbers(require(j, path, "points"), join(path, "points"));
    auto wts = numbers(require(j, path, "weights"), join(path, "weights"));
    return at_key(path, [&] { return Prior::grid(pts, wts); });
  }
  throw ConfigError(join(path, "family") + ": expected \"beta\" or \"grid\"");
}

nlohmann::json prior_json(const Prior& prior) {
  if (prior.is_beta()) {
    return {{"family", "beta"}, {"alpha", prior.as_beta().alpha}, {"beta", prior.as_beta().beta}};
  }
  return {{"family", "grid"}, {"points", prior.as_grid().points}, {"weights", prior.as_grid().weights}};
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError((path.empty() ? "<root>" : path) + ": expected an object");
  reject_unknown(j, path,
                 {"prior", "gamma", "utility", "horizon", "budget_fraction", "grid_size", "seed",
                  "posterior_convention", "out", "trace"});
  RunConfig cfg;
  cfg.prior = parse_prior(require(j, path, "prior"), join(path, "prior"));
  const auto horizon = integer(require(j, path, "horizon"), join(path, "horizon"));
  if (horizon < 1 || horizon > 40) throw ConfigError(join(path, "horizon") + ": must lie in [1, 40]");
  cfg.horizon = static_cast<int>(horizon);
  if (j.contains("gamma")) {
    cfg.gamma = number(j.at("gamma"), join(path, "gamma"));
    at_key(join(path, "gamma"), [&] { return ObservationModel(cfg.gamma); });
  }
  if (j.contains("utility")) {
    const auto& u = j.at("utility");
    const auto upath = join(path, "utility");
    if (!u.is_object()) throw ConfigError(upath + ": expected an object");
    reject_unknown(u, upath, {"kind", "param"});
    const auto kind = text(require(u, upath, "kind"), join(upath, "kind"));
    cfg.utility_kind = at_key(join(upath, "kind"), [&] { return utility_kind_from_string(kind); });
    if (u.contains("param")) cfg.utility_param = number(u.at("param"), join(upath, "param"));
  }
  at_key(join(path, "utility"), [&] { return cfg.utility(); });
  if (cfg.utility_kind == UtilityKind::FullyEffective) cfg.utility_param = 1.0;
  if (j.contains("budget_fraction")) {
    cfg.budget_fraction = number(j.at("budget_fraction"), join(path, "budget_fraction"));
    if (!(cfg.budget_fraction > 0.0 && cfg.budget_fraction <= 1.0)) {
      throw ConfigError(join(path, "budget_fraction") + ": must lie in (0,1]");
    }
  }
  if (j.contains("grid_size")) {
    const auto g = integer(j.at("grid_size"), join(path, "grid_size"));
    if (g < 1 || g > 100000) throw ConfigError(join(path, "grid_size") + ": must lie in [1, 100000]");
    cfg.grid_size = static_cast<int>(g);
  }
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError(join(path, "seed") + ": expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("posterior_convention")) {
    const auto c = text(j.at("posterior_convention"), join(path, "posterior_convention"));
    cfg.convention = at_key(join(path, "posterior_convention"), [&] { return convention_from_string(c); });
  }
  if (j.contains("out")) cfg.out = text(j.at("out"), join(path, "out"));
  if (j.contains("trace")) cfg.trace = text(j.at("trace"), join(path, "trace"));
  return cfg;
}

nlohmann::json read_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file + ": " + e.what());
  }
}

RunConfig load_config(const std::string& file) { return parse_config(read_json_file(file)); }

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = {
      {"prior", prior_json(cfg.prior)},
      {"gamma", cfg.gamma},
      {"utility", {{"kind", to_string(cfg.utility_kind)}, {"param", cfg.utility_param}}},
      {"horizon", cfg.horizon},
      {"budget_fraction", cfg.budget_fraction},
      {"grid_size", cfg.grid_size},
      {"seed", cfg.seed},
      {"posterior_convention", to_string(cfg.convention)},
  };
  if (cfg.out) j["out"] = *cfg.out;
  if (cfg.trace) j["trace"] = *cfg.trace;
  return j;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(cfg).dump())));
  return buf;
}

}  // namespace alloctime
