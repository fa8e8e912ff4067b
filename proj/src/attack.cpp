#include "hmarl/attack.hpp"

#include <stdexcept>

namespace hmarl {

namespace {

bool waiting_at_node(const TripTable& trips, const SimState& state, std::size_t r, NodeId* node) {
  if (state.arrived[r]) return false;
  const auto* at = std::get_if<AtNode>(&state.locations[r]);
  if (at == nullptr || at->node == trips[r].destination) return false;
  *node = at->node;
  return true;
}

void check_budget_arg(double budget) {
  if (!(budget >= 0.0)) throw std::invalid_argument("attack budget must be >= 0");
}

}  // namespace

EdgeDemandCount count_edge_demand(const RoadNetwork& network, const TripTable& trips, const SimState& state) {
  const std::vector<double> w = congested_times(network, state, trips);
  const auto routes = routes_for_deciding(network, trips, state, w);
  EdgeDemandCount counts(network.edge_count(), 0.0);
  for (std::size_t r = 0; r < trips.size(); ++r) {
    for (EdgeId e : routes[r]) counts[e] += trips[r].size;
  }
  return counts;
}

Perturbation greedy_from_counts(std::span<const double> counts, double budget) {
  check_budget_arg(budget);
  std::vector<double> a(counts.size(), 0.0);
  if (counts.empty()) return Perturbation(std::move(a));
  double total = 0.0;
  for (double s : counts) total += s;
  for (std::size_t e = 0; e < counts.size(); ++e) {
    a[e] = total > 0.0 ? counts[e] / total * budget : budget / static_cast<double>(counts.size());
  }
  return Perturbation(std::move(a));
}

Perturbation greedy_attack(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                           double budget) {
  return greedy_from_counts(count_edge_demand(network, trips, state), budget);
}

std::vector<double> deciding_vehicles(const TripTable& trips, const SimState& state, const Partition& partition) {
  std::vector<double> per_component(partition.K, 0.0);
  for (std::size_t r = 0; r < trips.size(); ++r) {
    NodeId node = 0;
    if (waiting_at_node(trips, state, r, &node)) per_component[partition.node_component[node]] += trips[r].size;
  }
  return per_component;
}

std::vector<double> proportional_allocation(const TripTable& trips, const SimState& state,
                                            const Partition& partition, double budget) {
  check_budget_arg(budget);
  const std::vector<double> deciders = deciding_vehicles(trips, state, partition);
  double total = 0.0;
  for (double d : deciders) total += d;
  std::vector<double> share(partition.K);
  for (std::size_t k = 0; k < partition.K; ++k) {
    share[k] = total > 0.0 ? budget * deciders[k] / total : budget / static_cast<double>(partition.K);
  }
  return share;
}

std::vector<double> local_greedy_from_counts(std::span<const double> counts, const Partition& partition,
                                             std::size_t k, double component_budget, LocalGreedyNorm norm) {
  check_budget_arg(component_budget);
  const std::vector<EdgeId> edges = partition.component_edges(k);
  std::vector<double> a(edges.size(), 0.0);
  if (edges.empty() || component_budget == 0.0) return a;
  double within = 0.0;
  for (EdgeId e : edges) within += counts[e];
  double denominator = within;
  if (norm == LocalGreedyNorm::Global) {
    denominator = 0.0;
    for (double s : counts) denominator += s;
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    a[i] = within > 0.0 ? counts[edges[i]] / denominator * component_budget
                        : component_budget / static_cast<double>(edges.size());
  }
  return a;
}

std::vector<double> local_greedy(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                                 const Partition& partition, std::size_t k, double component_budget,
                                 LocalGreedyNorm norm) {
  return local_greedy_from_counts(count_edge_demand(network, trips, state), partition, k, component_budget,
                                  norm);
}

Perturbation assemble_perturbation(const Partition& partition, std::span<const std::vector<double>> per_component) {
  if (per_component.size() != partition.K) {
    throw std::invalid_argument("assemble_perturbation: one vector per component required");
  }
  std::vector<double> a(partition.edge_component.size(), 0.0);
  std::vector<std::size_t> cursor(partition.K, 0);
  for (std::size_t e = 0; e < a.size(); ++e) {
    const std::size_t k = partition.edge_component[e];
    if (cursor[k] >= per_component[k].size()) {
      throw std::invalid_argument("assemble_perturbation: component " + std::to_string(k) + " vector too short");
    }
    a[e] = per_component[k][cursor[k]++];
  }
  for (std::size_t k = 0; k < partition.K; ++k) {
    if (cursor[k] != per_component[k].size()) {
      throw std::invalid_argument("assemble_perturbation: component " + std::to_string(k) + " vector too long");
    }
  }
  return Perturbation(std::move(a));
}

GreedyAttack::GreedyAttack(double budget) : budget_(budget) { check_budget_arg(budget); }

DecomposedGreedyAttack::DecomposedGreedyAttack(const RoadNetwork& network, Partition partition, double budget,
                                               LocalGreedyNorm norm)
    : partition_(std::move(partition)), budget_(budget), norm_(norm) {
  check_budget_arg(budget);
  if (partition_.edge_component.size() != network.edge_count()) {
    throw std::invalid_argument("DecomposedGreedyAttack: partition does not match the network");
  }
  for (std::size_t k = 0; k < partition_.K; ++k) {
    if (partition_.component_edges(k).empty()) {
      throw std::invalid_argument("DecomposedGreedyAttack: component " + std::to_string(k) + " has no edges");
    }
  }
}

Perturbation DecomposedGreedyAttack::act(const RoadNetwork& network, const TripTable& trips, const SimState& state) {
  const EdgeDemandCount counts = count_edge_demand(network, trips, state);
  const std::vector<double> allocation = proportional_allocation(trips, state, partition_, budget_);
  std::vector<std::vector<double>> per_component(partition_.K);
  for (std::size_t k = 0; k < partition_.K; ++k) {
    per_component[k] = local_greedy_from_counts(counts, partition_, k, allocation[k], norm_);
  }
  return assemble_perturbation(partition_, per_component);
}

std::unique_ptr<AttackPolicy> make_heuristic_attack(const std::string& name, const RoadNetwork& network,
                                                    const Partition& partition, double budget,
                                                    LocalGreedyNorm norm) {
  if (name == "none") return std::make_unique<NullAttack>();
  if (name == "greedy") return std::make_unique<GreedyAttack>(budget);
  if (name == "decomposed-greedy") return std::make_unique<DecomposedGreedyAttack>(network, partition, budget, norm);
  throw std::invalid_argument("unknown heuristic attacker '" + name + "'");
}

}  // namespace hmarl
