#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hmarl/decompose.hpp"
#include "hmarl/network.hpp"

namespace hmarl {

struct AtNode {
  NodeId node = 0;
  bool operator==(const AtNode&) const = default;
};

/// `remaining` counts the steps left on the edge; 1 means the vehicle reaches
/// the head node on the next step.
struct OnEdge {
  EdgeId edge = 0;
  std::uint32_t remaining = 1;
  bool operator==(const OnEdge&) const = default;
};

using VehicleLocation = std::variant<AtNode, OnEdge>;

struct SimState {
  std::size_t timestep = 0;
  std::vector<VehicleLocation> locations;  // one per trip
  std::vector<char> arrived;               // one per trip
  /// Route each trip committed to at its most recent decision (empty before
  /// the first decision and after arrival).
  std::vector<std::vector<EdgeId>> last_paths;

  static SimState initial(const TripTable& trips);
  bool all_arrived() const;
  bool operator==(const SimState&) const = default;
};

/// Nonnegative per-edge additions to the observed travel time.
class Perturbation {
 public:
  Perturbation() = default;
  /// Throws std::invalid_argument on a negative or non-finite entry.
  explicit Perturbation(std::vector<double> values);
  static Perturbation zeros(std::size_t edge_count) {
    return Perturbation(std::vector<double>(edge_count, 0.0));
  }

  std::size_t size() const noexcept { return a_.size(); }
  double operator[](std::size_t e) const { return a_[e]; }
  std::span<const double> values() const noexcept { return a_; }
  double l1_norm() const;

  bool operator==(const Perturbation&) const = default;

 private:
  std::vector<double> a_;
};

/// Thrown when an attacker breaks the budget contract.
class BudgetViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class BudgetMode {
  Exact,   // ||a||_1 == B
  AtMost,  // ||a||_1 <= B
  Zero,    // a == 0
};

inline constexpr double kBudgetTolerance = 1e-6;

/// Validates a perturbation against the contract; throws BudgetViolation.
void check_budget(const Perturbation& a, std::size_t edge_count, double budget, BudgetMode mode,
                  double tolerance = kBudgetTolerance);
/// Number of check_budget calls made by this process (all threads).
std::uint64_t budget_checks_performed();

/// W_e(n) = t_e * (1 + b_e * (n / c_e)^p_e).
double edge_travel_time(const EdgeSpec& edge, double vehicles);

/// Vehicles (sum of s_r) currently traversing each edge.
std::vector<double> edge_loads(const RoadNetwork& network, const TripTable& trips, const SimState& state);

/// Actual travel times w for the loads in `state`.
std::vector<double> congested_times(const RoadNetwork& network, const SimState& state, const TripTable& trips);

/// w + a elementwise; throws std::invalid_argument on a length mismatch.
std::vector<double> observed_times(std::span<const double> actual, const Perturbation& a);

/// Location membership for component accounting.
std::size_t location_component(const VehicleLocation& loc, const Partition& partition);

struct StepMetrics {
  std::vector<double> actual_times;    // w
  std::vector<double> observed_times;  // w + a
  std::vector<double> component_vehicles;  // unarrived vehicles per component after the step
  double remaining = 0.0;                  // unarrived vehicles after the step
  std::size_t routed_trips = 0;
  std::size_t unreachable_trips = 0;
};

struct StepResult {
  SimState state;
  StepMetrics metrics;
};

/// One transition. Routing uses observed times, traversal uses actual times.
StepResult step(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                const Perturbation& a, const Partition* partition = nullptr);

/// Per-trip route under `weights` for every unarrived trip waiting at a node
/// (empty for the others, or when the destination is unreachable).
std::vector<std::vector<EdgeId>> routes_for_deciding(const RoadNetwork& network, const TripTable& trips,
                                                     const SimState& state, std::span<const double> weights);

class AttackPolicy;

struct EpisodeResult {
  double gamma = 0.99;
  double discounted_objective = 0.0;
  std::vector<double> remaining_per_step;  // entry i: unarrived vehicles after step i + 1
  std::size_t steps_run = 0;
  bool all_arrived = false;
  std::size_t unreachable_events = 0;

  bool operator==(const EpisodeResult&) const = default;
};

struct EpisodeOptions {
  std::size_t horizon = 200;
  double gamma = 0.99;
  const Partition* partition = nullptr;
  /// Invoked after every step with the new state and the perturbation used.
  std::function<void(const SimState&, const Perturbation&, const StepMetrics&)> on_step;
};

/// Rolls out until every trip arrives or the horizon is reached. The
/// attacker's output is validated each step (throws BudgetViolation).
EpisodeResult run_episode(const RoadNetwork& network, const TripTable& trips, AttackPolicy& attacker,
                          const EpisodeOptions& options);

/// sum_i gamma^i * remaining[i].
double discounted_sum(std::span<const double> remaining, double gamma);

/// CSV with header `step,remaining,objective_contribution`.
void write_episode_csv(std::ostream& out, const EpisodeResult& result);

}  // namespace hmarl
