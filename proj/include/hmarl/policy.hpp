#pragma once

#include <string>

#include "hmarl/network.hpp"
#include "hmarl/simulator.hpp"

namespace hmarl {

/// An attacker with full observability of the network, trips and state.
class AttackPolicy {
 public:
  virtual ~AttackPolicy() = default;

  virtual std::string name() const = 0;
  virtual double budget() const = 0;
  virtual BudgetMode budget_mode() const { return BudgetMode::Exact; }
  /// Called once before the first step of every episode.
  virtual void begin_episode() {}
  virtual Perturbation act(const RoadNetwork& network, const TripTable& trips, const SimState& state) = 0;
};

}  // namespace hmarl
