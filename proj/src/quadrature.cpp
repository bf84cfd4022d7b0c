#include "alloctime/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace alloctime {

namespace {

// Legendre P_n and P_n' at z.
std::pair<double, double> legendre(std::size_t n, double z) {
  double p0 = 1.0, p1 = z;
  for (std::size_t k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
    p0 = p1;
    p1 = p2;
  }
  const double dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
  return {p1, dp};
}

GaussLegendre build_rule(std::size_t n) {
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.complements.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Newton in the angle so that 1 +- z keep full relative precision.
    double theta = std::numbers::pi * (i + 0.75) / (n + 0.5);
    for (int iter = 0; iter < 100; ++iter) {
      const auto [pn, dpn] = legendre(n, std::cos(theta));
      const double step = pn / (std::sin(theta) * dpn);
      theta += step;
      if (std::abs(step) < 1e-16) break;
    }
    const double z = std::cos(theta);
    const double s = std::sin(theta);
    const auto [pn, dpn] = legendre(n, z);
    (void)pn;
    const double w = 1.0 / (s * s * dpn * dpn);  // 2/(...) halved for [0,1]
    const double hi = std::cos(0.5 * theta) * std::cos(0.5 * theta);  // (1+z)/2
    const double lo = std::sin(0.5 * theta) * std::sin(0.5 * theta);  // (1-z)/2
    // Node i is near 1; mirror it near 0.
    rule.nodes[n - 1 - i] = hi;
    rule.complements[n - 1 - i] = lo;
    rule.weights[n - 1 - i] = w;
    rule.nodes[i] = lo;
    rule.complements[i] = hi;
    rule.weights[i] = w;
  }
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
  if (n == 0) throw DomainError("quadrature needs at least one node");
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendre>(build_rule(n));
  return *slot;
}

WeightedNodes discretize(const Prior& prior, std::size_t nodes_per_half) {
  WeightedNodes out;
  if (!prior.is_beta()) {
    const auto& g = prior.as_grid();
    out.p = g.points;
    out.w = g.weights;
    out.q.resize(g.points.size());
    for (std::size_t i = 0; i < g.points.size(); ++i) out.q[i] = 1.0 - g.points[i];
    return out;
  }

  const auto& b = prior.as_beta();
  const double a = b.alpha, bb = b.beta;
  const double log_norm = log_beta_function(a, bb);
  const auto& rule = gauss_legendre(nodes_per_half);
  const std::size_t n = rule.nodes.size();
  const double c = 0.5;
  out.p.reserve(2 * n);
  out.q.reserve(2 * n);
  out.w.reserve(2 * n);

  // Left half [0, c].
  for (std::size_t i = 0; i < n; ++i) {
    double p, w;
    if (a < 1.0) {
      // p = c u^{1/a}: p^{a-1} dp = (c^a / a) du.
      p = c * std::pow(rule.nodes[i], 1.0 / a);
      w = rule.weights[i] *
          std::exp(a * std::log(c) - std::log(a) + (bb - 1.0) * std::log1p(-p) - log_norm);
    } else {
      p = c * rule.nodes[i];
      w = rule.weights[i] * c *
          std::exp((a - 1.0) * std::log(p) + (bb - 1.0) * std::log1p(-p) - log_norm);
    }
    out.p.push_back(p);
    out.q.push_back(1.0 - p);
    out.w.push_back(w);
  }
  // Right half [c, 1], parametrized by q = 1 - p in [0, c]; stored with p
  // increasing.
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t i = n - 1 - j;
    double q, w;
    if (bb < 1.0) {
      q = c * std::pow(rule.nodes[i], 1.0 / bb);
      w = rule.weights[i] *
          std::exp(bb * std::log(c) - std::log(bb) + (a - 1.0) * std::log1p(-q) - log_norm);
    } else {
      q = c * rule.nodes[i];
      w = rule.weights[i] * c *
          std::exp((bb - 1.0) * std::log(q) + (a - 1.0) * std::log1p(-q) - log_norm);
    }
    out.p.push_back(1.0 - q);
    out.q.push_back(q);
    out.w.push_back(w);
  }
  return out;
}

namespace {

double log_tilt(double p, double q, double w, const ObservationModel& model, const Tilt& tilt) {
  if (!(w > 0.0)) return -INFINITY;
  double v = std::log(w);
  const double log_q = p < 0.5 ? std::log1p(-p) : std::log(q);
  if (tilt.survival != 0.0) v += q > 0.0 ? tilt.survival * log_q : -INFINITY;
  if (tilt.positives != 0.0) {
    // log ptilde = log(1 - q^gamma), accurate for both small and large p.
    const double lp = q > 0.0 ? std::log(-std::expm1(model.gamma() * log_q)) : 0.0;
    v += p > 0.0 ? tilt.positives * lp : -INFINITY;
  }
  if (tilt.negatives != 0.0) {
    v += q > 0.0 ? tilt.negatives * model.gamma() * log_q : -INFINITY;
  }
  return v;
}

}  // namespace

double log_tilted_mass(const WeightedNodes& nodes, const ObservationModel& model,
                       const Tilt& tilt) {
  const std::size_t n = nodes.size();
  std::vector<double> lw(n);
  double top = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = log_tilt(nodes.p[i], nodes.q[i], nodes.w[i], model, tilt);
    top = std::max(top, lw[i]);
  }
  if (!std::isfinite(top)) return -INFINITY;
  double sum = 0.0;
  for (double v : lw) sum += std::exp(v - top);
  return top + std::log(sum);
}

std::vector<double> tilted_weights(const WeightedNodes& nodes, const ObservationModel& model,
                                   const Tilt& tilt) {
  const std::size_t n = nodes.size();
  std::vector<double> lw(n);
  double top = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = log_tilt(nodes.p[i], nodes.q[i], nodes.w[i], model, tilt);
    top = std::max(top, lw[i]);
  }
  if (!std::isfinite(top)) throw DomainError("degenerate posterior");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = std::exp(lw[i] - top);
    sum += lw[i];
  }
  for (double& v : lw) v /= sum;
  return lw;
}

}  // namespace alloctime
