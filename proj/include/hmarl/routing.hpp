#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hmarl/network.hpp"

namespace hmarl {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();
inline constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();

struct Path {
  std::vector<NodeId> nodes;  // origin first, destination last
  std::vector<EdgeId> edges;  // edges[i] joins nodes[i] -> nodes[i + 1]
  double cost = 0.0;

  bool empty() const noexcept { return edges.empty(); }
};

/// Shortest-path tree toward a single destination, built by Dijkstra over
/// reversed edges. Among equal-cost relaxations the lowest edge id wins, so
/// every query is reproducible.
class RouteTree {
 public:
  RouteTree(const RoadNetwork& network, std::span<const double> weights, NodeId destination);

  NodeId destination() const noexcept { return destination_; }
  double cost(NodeId from) const { return cost_.at(from); }
  bool reachable(NodeId from) const { return cost_.at(from) != kUnreachable; }
  /// First edge of the route from `from`, kNoEdge at the destination or when unreachable.
  EdgeId next_edge(NodeId from) const { return next_.at(from); }
  /// Full route from `from`; std::nullopt when unreachable.
  std::optional<Path> path_from(const RoadNetwork& network, NodeId from) const;

 private:
  NodeId destination_;
  std::vector<double> cost_;
  std::vector<EdgeId> next_;
};

/// Minimum-weight route. Weights must be nonnegative and have one entry per
/// edge. Returns std::nullopt when `dest` is unreachable from `origin`.
std::optional<Path> shortest_path(const RoadNetwork& network, std::span<const double> weights,
                                  NodeId origin, NodeId dest);

/// Single-source distances along out-edges (forward Dijkstra).
std::vector<double> distances_from(const RoadNetwork& network, std::span<const double> weights,
                                   NodeId source);

}  // namespace hmarl
