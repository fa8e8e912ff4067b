#include "hmarl/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "hmarl/policy.hpp"
#include "hmarl/routing.hpp"

namespace hmarl {

namespace {

std::atomic<std::uint64_t> g_budget_checks{0};

constexpr double kMaxTraversalSteps = 1e9;

std::uint32_t traversal_steps(double actual_time) {
  const double rounded = std::round(actual_time);  // half away from zero
  return static_cast<std::uint32_t>(std::clamp(rounded, 1.0, kMaxTraversalSteps));
}

}  // namespace

SimState SimState::initial(const TripTable& trips) {
  SimState s;
  s.locations.reserve(trips.size());
  s.arrived.reserve(trips.size());
  for (const Trip& t : trips) {
    s.locations.emplace_back(AtNode{t.origin});
    s.arrived.push_back(t.origin == t.destination ? 1 : 0);
  }
  s.last_paths.resize(trips.size());
  return s;
}

bool SimState::all_arrived() const {
  return std::all_of(arrived.begin(), arrived.end(), [](char a) { return a != 0; });
}

Perturbation::Perturbation(std::vector<double> values) : a_(std::move(values)) {
  for (double v : a_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("Perturbation entries must be finite and >= 0");
    }
  }
}

double Perturbation::l1_norm() const {
  double total = 0.0;
  for (double v : a_) total += v;
  return total;
}

void check_budget(const Perturbation& a, std::size_t edge_count, double budget, BudgetMode mode,
                  double tolerance) {
  g_budget_checks.fetch_add(1, std::memory_order_relaxed);
  if (a.size() != edge_count) {
    throw BudgetViolation("perturbation has " + std::to_string(a.size()) + " entries, network has " +
                          std::to_string(edge_count) + " edges");
  }
  const double norm = a.l1_norm();
  std::ostringstream msg;
  msg << std::setprecision(12) << "||a||_1 = " << norm << " violates budget " << budget;
  switch (mode) {
    case BudgetMode::Exact:
      if (std::abs(norm - budget) > tolerance) throw BudgetViolation(msg.str() + " (exact)");
      break;
    case BudgetMode::AtMost:
      if (norm > budget + tolerance) throw BudgetViolation(msg.str() + " (at most)");
      break;
    case BudgetMode::Zero:
      if (norm != 0.0) throw BudgetViolation(msg.str() + " (null attacker)");
      break;
  }
}

std::uint64_t budget_checks_performed() { return g_budget_checks.load(); }

double edge_travel_time(const EdgeSpec& edge, double vehicles) {
  if (vehicles <= 0.0) return edge.free_flow_time;
  return edge.free_flow_time * (1.0 + edge.b * std::pow(vehicles / edge.capacity, edge.power));
}

std::vector<double> edge_loads(const RoadNetwork& network, const TripTable& trips, const SimState& state) {
  std::vector<double> load(network.edge_count(), 0.0);
  for (std::size_t r = 0; r < trips.size(); ++r) {
    if (state.arrived[r]) continue;
    if (const auto* on = std::get_if<OnEdge>(&state.locations[r])) load[on->edge] += trips[r].size;
  }
  return load;
}

std::vector<double> congested_times(const RoadNetwork& network, const SimState& state, const TripTable& trips) {
  std::vector<double> w = edge_loads(network, trips, state);
  for (const EdgeSpec& e : network.edges()) w[e.id] = edge_travel_time(e, w[e.id]);
  return w;
}

std::vector<double> observed_times(std::span<const double> actual, const Perturbation& a) {
  if (actual.size() != a.size()) {
    throw std::invalid_argument("observed_times: " + std::to_string(actual.size()) + " times vs " +
                                std::to_string(a.size()) + " perturbations");
  }
  std::vector<double> out(actual.begin(), actual.end());
  for (std::size_t e = 0; e < out.size(); ++e) out[e] += a[e];
  return out;
}

std::size_t location_component(const VehicleLocation& loc, const Partition& partition) {
  if (const auto* at = std::get_if<AtNode>(&loc)) return partition.node_component.at(at->node);
  return partition.edge_component.at(std::get<OnEdge>(loc).edge);
}

namespace {

/// Lazily built route trees, one per destination, against fixed weights.
class RouteCache {
 public:
  RouteCache(const RoadNetwork& network, std::span<const double> weights)
      : network_(network), weights_(weights), trees_(network.node_count()) {}

  const RouteTree& toward(NodeId dest) {
    auto& slot = trees_[dest];
    if (!slot) slot = std::make_unique<RouteTree>(network_, weights_, dest);
    return *slot;
  }

 private:
  const RoadNetwork& network_;
  std::span<const double> weights_;
  std::vector<std::unique_ptr<RouteTree>> trees_;
};

bool deciding(const TripTable& trips, const SimState& state, std::size_t r) {
  if (state.arrived[r]) return false;
  const auto* at = std::get_if<AtNode>(&state.locations[r]);
  return at != nullptr && at->node != trips[r].destination;
}

}  // namespace

std::vector<std::vector<EdgeId>> routes_for_deciding(const RoadNetwork& network, const TripTable& trips,
                                                     const SimState& state, std::span<const double> weights) {
  std::vector<std::vector<EdgeId>> routes(trips.size());
  RouteCache cache(network, weights);
  for (std::size_t r = 0; r < trips.size(); ++r) {
    if (!deciding(trips, state, r)) continue;
    const NodeId at = std::get<AtNode>(state.locations[r]).node;
    if (auto path = cache.toward(trips[r].destination).path_from(network, at)) {
      routes[r] = std::move(path->edges);
    }
  }
  return routes;
}

StepResult step(const RoadNetwork& network, const TripTable& trips, const SimState& state,
                const Perturbation& a, const Partition* partition) {
  if (state.locations.size() != trips.size() || state.arrived.size() != trips.size()) {
    throw std::invalid_argument("step: state does not match the trip table");
  }
  StepResult out;
  StepMetrics& m = out.metrics;
  m.actual_times = congested_times(network, state, trips);
  m.observed_times = observed_times(m.actual_times, a);

  SimState& next = out.state;
  next = state;
  next.timestep = state.timestep + 1;
  if (next.last_paths.size() != trips.size()) next.last_paths.resize(trips.size());

  RouteCache cache(network, m.observed_times);
  for (std::size_t r = 0; r < trips.size(); ++r) {
    if (state.arrived[r]) continue;
    const Trip& trip = trips[r];
    if (const auto* at = std::get_if<AtNode>(&state.locations[r])) {
      if (at->node == trip.destination) {
        next.arrived[r] = 1;
        continue;
      }
      auto path = cache.toward(trip.destination).path_from(network, at->node);
      if (!path) {
        ++m.unreachable_trips;  // frozen in place
        continue;
      }
      const EdgeId first = path->edges.front();
      next.locations[r] = OnEdge{first, traversal_steps(m.actual_times[first])};
      next.last_paths[r] = std::move(path->edges);
      ++m.routed_trips;
    } else {
      const OnEdge& on = std::get<OnEdge>(state.locations[r]);
      if (on.remaining <= 1) {
        const NodeId head = network.edge(on.edge).to;
        next.locations[r] = AtNode{head};
        if (head == trip.destination) {
          next.arrived[r] = 1;
          next.last_paths[r].clear();
        }
      } else {
        next.locations[r] = OnEdge{on.edge, on.remaining - 1};
      }
    }
  }

  if (partition != nullptr) m.component_vehicles.assign(partition->K, 0.0);
  for (std::size_t r = 0; r < trips.size(); ++r) {
    if (next.arrived[r]) continue;
    m.remaining += trips[r].size;
    if (partition != nullptr) {
      m.component_vehicles[location_component(next.locations[r], *partition)] += trips[r].size;
    }
  }
  return out;
}

double discounted_sum(std::span<const double> remaining, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (double v : remaining) {
    total += discount * v;
    discount *= gamma;
  }
  return total;
}

EpisodeResult run_episode(const RoadNetwork& network, const TripTable& trips, AttackPolicy& attacker,
                          const EpisodeOptions& options) {
  if (options.horizon == 0) throw std::invalid_argument("run_episode: horizon must be >= 1");
  if (!(options.gamma > 0.0 && options.gamma < 1.0)) {
    throw std::invalid_argument("run_episode: gamma must lie in (0, 1)");
  }
  EpisodeResult result;
  result.gamma = options.gamma;
  SimState state = SimState::initial(trips);
  attacker.begin_episode();
  while (!state.all_arrived() && result.steps_run < options.horizon) {
    const Perturbation a = attacker.act(network, trips, state);
    check_budget(a, network.edge_count(), attacker.budget(), attacker.budget_mode());
    StepResult next = step(network, trips, state, a, options.partition);
    result.unreachable_events += next.metrics.unreachable_trips;
    result.remaining_per_step.push_back(next.metrics.remaining);
    ++result.steps_run;
    state = std::move(next.state);
    if (options.on_step) options.on_step(state, a, next.metrics);
  }
  result.all_arrived = state.all_arrived();
  result.discounted_objective = discounted_sum(result.remaining_per_step, options.gamma);
  return result;
}

void write_episode_csv(std::ostream& out, const EpisodeResult& result) {
  out << "step,remaining,objective_contribution\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  double discount = 1.0;
  for (std::size_t i = 0; i < result.remaining_per_step.size(); ++i) {
    out << i + 1 << ',' << result.remaining_per_step[i] << ',' << discount * result.remaining_per_step[i]
        << '\n';
    discount *= result.gamma;
  }
  out.precision(old_precision);
}

}  // namespace hmarl
