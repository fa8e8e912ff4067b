#include "hmarl/routing.hpp"

#include <functional>
#include <queue>
#include <stdexcept>
#include <utility>

namespace hmarl {

namespace {

void check_weights(const RoadNetwork& network, std::span<const double> weights) {
  if (weights.size() != network.edge_count()) {
    throw std::invalid_argument("routing: expected " + std::to_string(network.edge_count()) +
                                " weights, got " + std::to_string(weights.size()));
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("routing: weights must be >= 0");
  }
}

using QueueEntry = std::pair<double, NodeId>;
using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

}  // namespace

RouteTree::RouteTree(const RoadNetwork& network, std::span<const double> weights, NodeId destination)
    : destination_(destination),
      cost_(network.node_count(), kUnreachable),
      next_(network.node_count(), kNoEdge) {
  check_weights(network, weights);
  if (destination >= network.node_count()) throw std::out_of_range("RouteTree: destination out of range");

  std::vector<char> settled(network.node_count(), 0);
  MinQueue queue;
  cost_[destination] = 0.0;
  queue.emplace(0.0, destination);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (settled[v]) continue;
    settled[v] = 1;
    for (EdgeId e : network.in_edges(v)) {
      const NodeId u = network.edge(e).from;
      if (settled[u]) continue;
      const double candidate = d + weights[e];
      if (candidate < cost_[u]) {
        cost_[u] = candidate;
        next_[u] = e;
        queue.emplace(candidate, u);
      } else if (candidate == cost_[u] && e < next_[u]) {
        next_[u] = e;
      }
    }
  }
}

std::optional<Path> RouteTree::path_from(const RoadNetwork& network, NodeId from) const {
  if (!reachable(from)) return std::nullopt;
  Path path;
  path.cost = cost_[from];
  path.nodes.push_back(from);
  NodeId v = from;
  while (v != destination_) {
    const EdgeId e = next_[v];
    path.edges.push_back(e);
    v = network.edge(e).to;
    path.nodes.push_back(v);
  }
  return path;
}

std::optional<Path> shortest_path(const RoadNetwork& network, std::span<const double> weights,
                                  NodeId origin, NodeId dest) {
  if (origin >= network.node_count()) throw std::out_of_range("shortest_path: origin out of range");
  if (origin == dest) {
    Path p;
    p.nodes.push_back(origin);
    return p;
  }
  return RouteTree(network, weights, dest).path_from(network, origin);
}

std::vector<double> distances_from(const RoadNetwork& network, std::span<const double> weights,
                                   NodeId source) {
  check_weights(network, weights);
  std::vector<double> dist(network.node_count(), kUnreachable);
  std::vector<char> settled(network.node_count(), 0);
  MinQueue queue;
  dist.at(source) = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (settled[v]) continue;
    settled[v] = 1;
    for (EdgeId e : network.out_edges(v)) {
      const NodeId u = network.edge(e).to;
      const double candidate = d + weights[e];
      if (candidate < dist[u]) {
        dist[u] = candidate;
        queue.emplace(candidate, u);
      }
    }
  }
  return dist;
}

}  // namespace hmarl
