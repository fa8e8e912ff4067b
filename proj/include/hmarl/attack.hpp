#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hmarl/decompose.hpp"
#include "hmarl/network.hpp"
#include "hmarl/policy.hpp"
#include "hmarl/simulator.hpp"

namespace hmarl {

/// Per edge, the vehicles at nodes whose unperturbed shortest path uses it.
using EdgeDemandCount = std::vector<double>;

EdgeDemandCount count_edge_demand(const RoadNetwork& network, const TripTable& trips, const SimState& state);

/// a_e = s_e / sum(s) * B, or B / |E| on every edge when sum(s) is zero.
Perturbation greedy_from_counts(std::span<const double> counts, double budget);
Perturbation greedy_attack(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                           double budget);

/// Vehicles waiting at a node (unarrived) in each component.
std::vector<double> deciding_vehicles(const TripTable& trips, const SimState& state, const Partition& partition);

/// Splits B across components in proportion to their deciding vehicles;
/// uniform when nobody is deciding.
std::vector<double> proportional_allocation(const TripTable& trips, const SimState& state,
                                            const Partition& partition, double budget);

enum class LocalGreedyNorm {
  Component,  // divide by the component's own count total; spends exactly b_k
  Global,     // divide by the network-wide count total; may spend less than b_k
};

/// Budget b_k spread over component k's edges (in component_edges(k) order).
std::vector<double> local_greedy_from_counts(std::span<const double> counts, const Partition& partition,
                                             std::size_t k, double component_budget,
                                             LocalGreedyNorm norm = LocalGreedyNorm::Component);
std::vector<double> local_greedy(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                                 const Partition& partition, std::size_t k, double component_budget,
                                 LocalGreedyNorm norm = LocalGreedyNorm::Component);

/// Scatters per-component edge vectors back into one network-wide perturbation.
Perturbation assemble_perturbation(const Partition& partition, std::span<const std::vector<double>> per_component);

class NullAttack final : public AttackPolicy {
 public:
  std::string name() const override { return "none"; }
  double budget() const override { return 0.0; }
  BudgetMode budget_mode() const override { return BudgetMode::Zero; }
  Perturbation act(const RoadNetwork& network, const TripTable&, const SimState&) override {
    return Perturbation::zeros(network.edge_count());
  }
};

class GreedyAttack final : public AttackPolicy {
 public:
  explicit GreedyAttack(double budget);
  std::string name() const override { return "greedy"; }
  double budget() const override { return budget_; }
  Perturbation act(const RoadNetwork& network, const TripTable& trips, const SimState& state) override {
    return greedy_attack(network, trips, state, budget_);
  }

 private:
  double budget_;
};

/// Proportional high-level allocation followed by local greedy per component.
class DecomposedGreedyAttack final : public AttackPolicy {
 public:
  DecomposedGreedyAttack(const RoadNetwork& network, Partition partition, double budget,
                         LocalGreedyNorm norm = LocalGreedyNorm::Component);
  std::string name() const override { return "decomposed-greedy"; }
  double budget() const override { return budget_; }
  BudgetMode budget_mode() const override {
    return norm_ == LocalGreedyNorm::Component ? BudgetMode::Exact : BudgetMode::AtMost;
  }
  Perturbation act(const RoadNetwork& network, const TripTable& trips, const SimState& state) override;

 private:
  Partition partition_;
  double budget_;
  LocalGreedyNorm norm_;
};

/// "none", "greedy" or "decomposed-greedy". The partition is only used by the
/// decomposed heuristic. Throws std::invalid_argument for other names.
std::unique_ptr<AttackPolicy> make_heuristic_attack(const std::string& name, const RoadNetwork& network,
                                                    const Partition& partition, double budget,
                                                    LocalGreedyNorm norm = LocalGreedyNorm::Component);

}  // namespace hmarl
