#pragma once

#include <cstddef>
#include <vector>

#include "alloctime/model.hpp"

namespace alloctime {

/// Gauss-Legendre rule on [0,1].
struct GaussLegendre {
  std::vector<double> nodes;
  /// 1 - nodes, computed without cancellation.
  std::vector<double> complements;
  std::vector<double> weights;
};

/// Cached rule with n nodes. Thread-safe.
const GaussLegendre& gauss_legendre(std::size_t n);

/// A prior reduced to weighted atoms. q is stored separately from p so
/// that values near p = 1 keep full precision.
struct WeightedNodes {
  std::vector<double> p;
  std::vector<double> q;
  std::vector<double> w;
  std::size_t size() const { return p.size(); }
};

constexpr std::size_t kDefaultNodesPerHalf = 2048;

/// Beta priors: Gauss-Legendre on [0,1/2] and [1/2,1]. An endpoint with
/// exponent below 1 is integrated in u = p^a (or u = (1-p)^b) so the
/// singular factor is absorbed into the weight. Grid priors: the atoms.
WeightedNodes discretize(const Prior& prior, std::size_t nodes_per_half = kDefaultNodesPerHalf);

/// Multiplicative factor q^survival * ptilde^positives * (1-ptilde)^negatives.
struct Tilt {
  double survival = 0.0;
  double positives = 0.0;
  double negatives = 0.0;
};

/// Weights of `nodes` multiplied by the tilt and normalized to sum 1.
/// Computed in log space. Throws DomainError if no mass remains.
std::vector<double> tilted_weights(const WeightedNodes& nodes, const ObservationModel& model,
                                   const Tilt& tilt);

/// Unnormalized log of sum_i w_i * tilt(p_i).
double log_tilted_mass(const WeightedNodes& nodes, const ObservationModel& model,
                       const Tilt& tilt);

}  // namespace alloctime
