#pragma once

#include <vector>

#include "hmarl/decompose.hpp"
#include "hmarl/network.hpp"
#include "hmarl/simulator.hpp"

namespace hmarl {

/// Per-edge attacker features, all in vehicles (m in vehicle-steps).
struct EdgeFeatures {
  std::vector<double> route_demand;   // s_e: deciding vehicles whose unperturbed route uses e
  std::vector<double> on_edge;        // n_e: vehicles traversing e
  std::vector<double> entering;       // ŝ_e: deciding vehicles whose unperturbed route starts with e
  std::vector<double> pending_steps;  // m_e: sum of s_r * remaining over vehicles on e
  std::vector<double> committed;      // s̃_e: unarrived vehicles whose last committed route contains e
};

inline constexpr std::size_t kFeaturesPerEdge = 5;

EdgeFeatures compute_edge_features(const RoadNetwork& network, const TripTable& trips, const SimState& state);

/// Low-level observation of component k: the five features of each of its
/// edges, flattened edge by edge (length 5 * |E_k|).
std::vector<double> observe_low(const EdgeFeatures& features, const Partition& partition, std::size_t k);
std::vector<double> observe_low(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                                const Partition& partition, std::size_t k);

/// High-level observation: (sum n_e, sum ŝ_e) per component (length 2K).
std::vector<double> observe_high(const EdgeFeatures& features, const Partition& partition);
std::vector<double> observe_high(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                                 const Partition& partition);

/// Unarrived vehicles located in component k (node or edge).
double reward_low(const TripTable& trips, const SimState& state, const Partition& partition, std::size_t k);
/// Unarrived vehicles in the whole network.
double reward_high(const TripTable& trips, const SimState& state);

}  // namespace hmarl
