#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hmarl/network.hpp"

namespace hmarl {

/// K node clusters; every edge belongs to the cluster of its source node.
struct Partition {
  std::size_t K = 1;
  std::vector<std::size_t> node_component;
  std::vector<std::size_t> edge_component;
  std::vector<NodeId> medoids;

  /// Edge ids of component k in increasing order.
  std::vector<EdgeId> component_edges(std::size_t k) const;
  std::vector<NodeId> component_nodes(std::size_t k) const;
};

/// Whole network as a single component.
Partition single_component(const RoadNetwork& network);

/// Builds a partition from a node labelling; edges follow their source node.
/// Throws std::invalid_argument if a label is >= K or a component is empty.
Partition partition_from_nodes(const RoadNetwork& network, std::size_t K,
                               std::vector<std::size_t> node_component);

/// Dense row-major all-pairs matrix of free-flow shortest-path costs.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}
  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t from, std::size_t to) const { return d_[from * n_ + to]; }
  double& operator()(std::size_t from, std::size_t to) { return d_[from * n_ + to]; }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

/// d(u, v) under weights t_e; infinity when v is unreachable from u.
DistanceMatrix free_flow_distances(const RoadNetwork& network);

struct ClusteringTrace {
  Partition partition;
  /// Within-cluster symmetrized distance after each iteration.
  std::vector<double> cost_per_iteration;
  std::size_t iterations = 0;
};

/// Lloyd-style K-medoids over symmetrized free-flow distances.
/// Requires 1 <= K <= node_count and a strongly connected network when K > 1.
ClusteringTrace kmeans_cluster_traced(const RoadNetwork& network, std::size_t K, std::uint64_t seed);
Partition kmeans_cluster(const RoadNetwork& network, std::size_t K, std::uint64_t seed);

/// Two-column text map "node component" with 1-based node ids.
void write_partition(std::ostream& out, const Partition& partition);

}  // namespace hmarl
