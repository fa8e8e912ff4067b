#include "hmarl/features.hpp"

namespace hmarl {

EdgeFeatures compute_edge_features(const RoadNetwork& network, const TripTable& trips, const SimState& state) {
  const std::size_t E = network.edge_count();
  EdgeFeatures f{std::vector<double>(E, 0.0), std::vector<double>(E, 0.0), std::vector<double>(E, 0.0),
                 std::vector<double>(E, 0.0), std::vector<double>(E, 0.0)};

  const std::vector<double> w = congested_times(network, state, trips);
  const auto routes = routes_for_deciding(network, trips, state, w);
  for (std::size_t r = 0; r < trips.size(); ++r) {
    if (state.arrived[r]) continue;
    const double s = trips[r].size;
    if (!routes[r].empty()) {
      for (EdgeId e : routes[r]) f.route_demand[e] += s;
      f.entering[routes[r].front()] += s;
    }
    if (const auto* on = std::get_if<OnEdge>(&state.locations[r])) {
      f.on_edge[on->edge] += s;
      f.pending_steps[on->edge] += s * static_cast<double>(on->remaining);
    }
    if (r < state.last_paths.size()) {
      for (EdgeId e : state.last_paths[r]) f.committed[e] += s;
    }
  }
  return f;
}

std::vector<double> observe_low(const EdgeFeatures& f, const Partition& partition, std::size_t k) {
  std::vector<double> obs;
  for (EdgeId e : partition.component_edges(k)) {
    obs.insert(obs.end(), {f.route_demand[e], f.on_edge[e], f.entering[e], f.pending_steps[e], f.committed[e]});
  }
  return obs;
}

std::vector<double> observe_low(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                                const Partition& partition, std::size_t k) {
  return observe_low(compute_edge_features(network, trips, state), partition, k);
}

std::vector<double> observe_high(const EdgeFeatures& f, const Partition& partition) {
  std::vector<double> obs(2 * partition.K, 0.0);
  for (std::size_t e = 0; e < partition.edge_component.size(); ++e) {
    const std::size_t k = partition.edge_component[e];
    obs[2 * k] += f.on_edge[e];
    obs[2 * k + 1] += f.entering[e];
  }
  return obs;
}

std::vector<double> observe_high(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                                 const Partition& partition) {
  return observe_high(compute_edge_features(network, trips, state), partition);
}

double reward_low(const TripTable& trips, const SimState& state, const Partition& partition, std::size_t k) {
  double total = 0.0;
  for (std::size_t r = 0; r < trips.size(); ++r) {
    if (!state.arrived[r] && location_component(state.locations[r], partition) == k) total += trips[r].size;
  }
  return total;
}

double reward_high(const TripTable& trips, const SimState& state) {
  double total = 0.0;
  for (std::size_t r = 0; r < trips.size(); ++r) {
    if (!state.arrived[r]) total += trips[r].size;
  }
  return total;
}

}  // namespace hmarl
