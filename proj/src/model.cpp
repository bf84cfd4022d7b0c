#include "alloctime/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace alloctime {

namespace {

struct GridCells {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> density;
};

GridCells grid_cells(const GridDensity& g) {
  const std::size_t n = g.points.size();
  GridCells cells;
  cells.lower.resize(n);
  cells.upper.resize(n);
  cells.density.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cells.lower[i] = i == 0 ? 0.0 : 0.5 * (g.points[i - 1] + g.points[i]);
    cells.upper[i] = i + 1 == n ? 1.0 : 0.5 * (g.points[i] + g.points[i + 1]);
    const double width = cells.upper[i] - cells.lower[i];
    cells.density[i] = width > 0.0 ? g.weights[i] / width : 0.0;
  }
  return cells;
}

std::size_t cell_index(const GridCells& cells, double p) {
  auto it = std::upper_bound(cells.upper.begin(), cells.upper.end(), p);
  if (it == cells.upper.end()) return cells.upper.size() - 1;
  return static_cast<std::size_t>(it - cells.upper.begin());
}

double beta_log_density(const BetaParams& b, double p) {
  return (b.alpha - 1.0) * std::log(p) + (b.beta - 1.0) * std::log1p(-p) -
         log_beta_function(b.alpha, b.beta);
}

}  // namespace

double log_beta_function(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

Prior Prior::beta(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw DomainError("Beta prior requires alpha > 0 and beta > 0");
  }
  return Prior(BetaParams{alpha, beta});
}

Prior Prior::grid(std::vector<double> points, std::vector<double> weights) {
  if (points.empty() || points.size() != weights.size()) {
    throw DomainError("grid prior needs matching, non-empty points and weights");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] >= 0.0 && points[i] <= 1.0)) {
      throw DomainError("grid points must lie in [0,1]");
    }
    if (i > 0 && !(points[i] > points[i - 1])) {
      throw DomainError("grid points must be strictly increasing");
    }
    if (!(weights[i] >= 0.0)) throw DomainError("grid weights must be non-negative");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("grid weights must sum to 1");
  }
  return Prior(GridDensity{std::move(points), std::move(weights)});
}

Prior Prior::point(double p) { return grid({p}, {1.0}); }

Prior Prior::grid_from_density(std::size_t cells,
                               const std::function<double(double)>& density) {
  if (cells == 0) throw DomainError("grid needs at least one cell");
  std::vector<double> points(cells);
  std::vector<double> weights(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    points[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(cells);
    weights[i] = std::max(0.0, density(points[i]));
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("grid density has no mass");
  for (double& w : weights) w /= total;
  // Renormalize once more so the sum is 1 to rounding.
  const double again = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= again;
  return Prior(GridDensity{std::move(points), std::move(weights)});
}

const BetaParams& Prior::as_beta() const {
  if (!is_beta()) throw DomainError("prior is not a Beta distribution");
  return std::get<BetaParams>(family_);
}

const GridDensity& Prior::as_grid() const {
  if (is_beta()) throw DomainError("prior is not a grid density");
  return std::get<GridDensity>(family_);
}

double Prior::mean() const {
  if (is_beta()) {
    const auto& b = as_beta();
    return b.alpha / (b.alpha + b.beta);
  }
  const auto& g = as_grid();
  return std::inner_product(g.points.begin(), g.points.end(), g.weights.begin(), 0.0);
}

double Prior::second_moment() const {
  if (is_beta()) {
    const auto& b = as_beta();
    const double s = b.alpha + b.beta;
    return b.alpha * (b.alpha + 1.0) / (s * (s + 1.0));
  }
  const auto& g = as_grid();
  double m = 0.0;
  for (std::size_t i = 0; i < g.points.size(); ++i) m += g.weights[i] * g.points[i] * g.points[i];
  return m;
}

double Prior::variance() const {
  if (is_beta()) {
    const auto& b = as_beta();
    const double s = b.alpha + b.beta;
    return b.alpha * b.beta / (s * s * (s + 1.0));
  }
  const double mu = mean();
  const auto& g = as_grid();
  double v = 0.0;
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    v += g.weights[i] * (g.points[i] - mu) * (g.points[i] - mu);
  }
  return v;
}

double Prior::density(double p) const {
  if (is_beta()) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return std::exp(beta_log_density(as_beta(), p));
  }
  const auto cells = grid_cells(as_grid());
  return cells.density[cell_index(cells, p)];
}

double Prior::density_derivative(double p) const {
  if (is_beta()) {
    const auto& b = as_beta();
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return density(p) * ((b.alpha - 1.0) / p - (b.beta - 1.0) / (1.0 - p));
  }
  const auto& g = as_grid();
  const auto cells = grid_cells(g);
  const std::size_t n = g.points.size();
  if (n < 3) return 0.0;
  std::size_t i = std::clamp<std::size_t>(cell_index(cells, p), 1, n - 2);
  return (cells.density[i + 1] - cells.density[i - 1]) / (g.points[i + 1] - g.points[i - 1]);
}

ObservationModel::ObservationModel(double gamma) : gamma_(gamma) {
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
    throw DomainError("observation model requires gamma >= 1");
  }
}

double ObservationModel::ptilde_from_survival(double q) const {
  if (q <= 0.0) return 1.0;
  if (q >= 1.0) return 0.0;
  return -std::expm1(gamma_ * std::log(q));
}

double ObservationModel::negative_rate_from_survival(double q) const {
  if (q <= 0.0) return 0.0;
  return std::pow(q, gamma_);
}

const char* to_string(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::FullyEffective: return "fully_effective";
    case UtilityKind::RiskyProcedure: return "risky";
    case UtilityKind::PartialSuccess: return "partial";
    case UtilityKind::RiskReduction: return "risk_reduction";
  }
  return "unknown";
}

UtilityKind utility_kind_from_string(const std::string& name) {
  if (name == "fully_effective") return UtilityKind::FullyEffective;
  if (name == "risky") return UtilityKind::RiskyProcedure;
  if (name == "partial") return UtilityKind::PartialSuccess;
  if (name == "risk_reduction") return UtilityKind::RiskReduction;
  throw DomainError("unknown utility kind: " + name);
}

UtilityFunction::UtilityFunction(UtilityKind kind, int horizon, double param)
    : kind_(kind), horizon_(horizon), param_(param) {
  if (horizon < 1) throw DomainError("utility horizon must be at least 1");
  switch (kind) {
    case UtilityKind::FullyEffective:
      param_ = 1.0;
      break;
    case UtilityKind::RiskyProcedure:
    case UtilityKind::PartialSuccess:
      if (!(param > 0.0 && param <= 1.0)) {
        throw DomainError("success probability must lie in (0,1]");
      }
      break;
    case UtilityKind::RiskReduction:
      if (!(param > 1.0) || !std::isfinite(param)) {
        throw DomainError("risk reduction factor must exceed 1");
      }
      break;
  }
}

void UtilityFunction::check_time(int t) const {
  if (t < 1 || t > horizon_) throw DomainError("time step outside [1, T]");
}

double UtilityFunction::operator()(int t, double p) const {
  check_time(t);
  const int n = horizon_ - t;
  if (n == 0) return 0.0;
  const double q = 1.0 - p;
  // 1 - q^n, accurate for small p.
  const double fail_by_horizon = -std::expm1(n * std::log1p(-p));
  switch (kind_) {
    case UtilityKind::FullyEffective:
      return p >= 1.0 ? 1.0 : fail_by_horizon;
    case UtilityKind::RiskyProcedure:
    case UtilityKind::PartialSuccess:
      return param_ * (p >= 1.0 ? 1.0 : fail_by_horizon);
    case UtilityKind::RiskReduction:
      return std::pow(1.0 - p / param_, n) - std::pow(q, n);
  }
  return 0.0;
}

double UtilityFunction::derivative(int t, double p) const {
  check_time(t);
  const int n = horizon_ - t;
  if (n == 0) return 0.0;
  const double q = 1.0 - p;
  const double base = n * std::pow(q, n - 1);
  switch (kind_) {
    case UtilityKind::FullyEffective: return base;
    case UtilityKind::RiskyProcedure:
    case UtilityKind::PartialSuccess: return param_ * base;
    case UtilityKind::RiskReduction:
      return base - (n / param_) * std::pow(1.0 - p / param_, n - 1);
  }
  return 0.0;
}

DecayingConstants UtilityFunction::decaying_constants(int t) const {
  check_time(t);
  switch (kind_) {
    case UtilityKind::FullyEffective: return {1.0, 1.0};
    // c * (1 - (1-p)^{T-t}) has the same shape as the partial-success
    // utility, so the bounded-increase constant is 1 rather than c.
    case UtilityKind::RiskyProcedure: return {param_, 1.0};
    case UtilityKind::PartialSuccess: return {param_, 1.0};
    case UtilityKind::RiskReduction:
      return {std::pow(1.0 - 1.0 / param_, horizon_ - t), 1.0};
  }
  throw DomainError("unknown utility kind");
}

double ptilde(double p, const ObservationModel& model) { return model.ptilde(p); }

double utility_eval(const UtilityFunction& u, int t, double p) { return u(t, p); }

DecayingConstants decaying_constants(const UtilityFunction& u, int t) {
  return u.decaying_constants(t);
}

GDecayReport check_G_decaying(const Prior& prior, double G, int steps, double tolerance) {
  if (!(G >= 0.0)) throw DomainError("G must be non-negative");
  GDecayReport report;
  auto record = [&](double p, double dens, double deriv) {
    const double lower = -G * dens / (1.0 - p);
    const double scale = std::max({std::abs(deriv), std::abs(lower), dens, 1e-300});
    const double violation = std::max(deriv / scale, (lower - deriv) / scale);
    if (violation > report.worst_violation) {
      report.worst_violation = violation;
      report.worst_point = p;
    }
  };

  if (prior.is_beta()) {
    const double h = 1.0 / steps;
    for (int i = 1; i < steps; ++i) {
      const double p = i * h;
      const double dens = prior.density(p);
      const double deriv = prior.density_derivative(p);
      record(p, dens, deriv);
      // Finite differences are only meaningful away from the endpoints.
      if (std::min(p, 1.0 - p) < 0.05) continue;
      const double fd = (prior.density(p + 0.5 * h) - prior.density(p - 0.5 * h)) / h;
      const double gap = std::abs(fd - deriv) / std::max({std::abs(deriv), dens, 1e-300});
      report.max_fd_discrepancy = std::max(report.max_fd_discrepancy, gap);
    }
  } else {
    const auto& g = prior.as_grid();
    for (std::size_t i = 1; i + 1 < g.points.size(); ++i) {
      const double p = g.points[i];
      record(p, prior.density(p), prior.density_derivative(p));
    }
  }
  report.holds = report.worst_violation <= tolerance;
  return report;
}

GDecayBounds g_decaying_bounds(double G) {
  if (!(G >= 0.0)) throw DomainError("G must be non-negative");
  return GDecayBounds{G, 1.0 / (2.0 + G)};
}

RawMoments beta_forward_moments(double alpha, double beta) {
  const double s = alpha + beta;
  return {alpha / s, alpha * (alpha + 1.0) / (s * (s + 1.0))};
}

Prior estimate_beta_prior(double m0, double m1) {
  if (!(m0 > 0.0 && m0 < 1.0 && m1 > 0.0 && m1 < m0 && m1 > m0 * m0)) {
    throw DomainError("moments inconsistent with a Beta prior");
  }
  const double s = (m0 - m1) / (m1 - m0 * m0);
  const double alpha = m0 * s;
  return Prior::beta(alpha, s - alpha);
}

}  // namespace alloctime
