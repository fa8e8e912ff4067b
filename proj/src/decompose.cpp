#include "hmarl/decompose.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "hmarl/routing.hpp"

namespace hmarl {

std::vector<EdgeId> Partition::component_edges(std::size_t k) const {
  std::vector<EdgeId> out;
  for (std::size_t e = 0; e < edge_component.size(); ++e) {
    if (edge_component[e] == k) out.push_back(static_cast<EdgeId>(e));
  }
  return out;
}

std::vector<NodeId> Partition::component_nodes(std::size_t k) const {
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < node_component.size(); ++v) {
    if (node_component[v] == k) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

Partition partition_from_nodes(const RoadNetwork& network, std::size_t K,
                               std::vector<std::size_t> node_component) {
  if (K == 0) throw std::invalid_argument("partition: K must be >= 1");
  if (node_component.size() != network.node_count()) {
    throw std::invalid_argument("partition: one label per node required");
  }
  std::vector<std::size_t> members(K, 0);
  for (std::size_t c : node_component) {
    if (c >= K) throw std::invalid_argument("partition: component label out of range");
    ++members[c];
  }
  if (std::find(members.begin(), members.end(), 0u) != members.end()) {
    throw std::invalid_argument("partition: empty component");
  }
  Partition p;
  p.K = K;
  p.node_component = std::move(node_component);
  p.edge_component.reserve(network.edge_count());
  for (const EdgeSpec& e : network.edges()) p.edge_component.push_back(p.node_component[e.from]);
  p.medoids.assign(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    p.medoids[k] = static_cast<NodeId>(
        std::find(p.node_component.begin(), p.node_component.end(), k) - p.node_component.begin());
  }
  return p;
}

Partition single_component(const RoadNetwork& network) {
  return partition_from_nodes(network, 1, std::vector<std::size_t>(network.node_count(), 0));
}

DistanceMatrix free_flow_distances(const RoadNetwork& network) {
  std::vector<double> weights;
  weights.reserve(network.edge_count());
  for (const EdgeSpec& e : network.edges()) weights.push_back(e.free_flow_time);
  DistanceMatrix d(network.node_count());
  for (NodeId u = 0; u < network.node_count(); ++u) {
    const auto row = distances_from(network, weights, u);
    for (NodeId v = 0; v < network.node_count(); ++v) d(u, v) = row[v];
  }
  return d;
}

namespace {

struct Clustering {
  std::vector<std::size_t> label;
  std::vector<NodeId> medoid;
};

double clustering_cost(const DistanceMatrix& sym, const Clustering& c) {
  double total = 0.0;
  for (std::size_t v = 0; v < sym.size(); ++v) total += sym(v, c.medoid[c.label[v]]);
  return total;
}

}  // namespace

ClusteringTrace kmeans_cluster_traced(const RoadNetwork& network, std::size_t K, std::uint64_t seed) {
  const std::size_t n = network.node_count();
  if (K == 0 || K > n) {
    throw std::invalid_argument("kmeans_cluster: K must lie in [1, " + std::to_string(n) + "]");
  }
  ClusteringTrace trace;
  if (K == 1) {
    trace.partition = single_component(network);
    return trace;
  }

  const DistanceMatrix directed = free_flow_distances(network);
  DistanceMatrix sym(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      sym(u, v) = 0.5 * (directed(u, v) + directed(v, u));
      if (sym(u, v) == kUnreachable) {
        throw std::invalid_argument("kmeans_cluster: network is not strongly connected");
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<NodeId> nodes(n);
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  // Partial Fisher-Yates: first K entries become the initial medoids.
  for (std::size_t i = 0; i < K; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(nodes[i], nodes[pick(rng)]);
  }
  Clustering c;
  c.medoid.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(K));
  c.label.assign(n, K);

  constexpr std::size_t kMaxIterations = 100;
  for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
    // Assignment: nearest medoid, lowest index on ties.
    std::vector<std::size_t> label(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < K; ++k) {
        if (sym(v, c.medoid[k]) < sym(v, c.medoid[best])) best = k;
      }
      label[v] = best;
    }
    // Empty clusters take the node farthest from its own medoid.
    for (std::size_t k = 0; k < K; ++k) {
      if (std::find(label.begin(), label.end(), k) != label.end()) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t v = 0; v < n; ++v) {
        const std::size_t own = label[v];
        const bool sole_member = std::count(label.begin(), label.end(), own) == 1;
        if (sole_member) continue;
        if (sym(v, c.medoid[own]) > far_d) {
          far_d = sym(v, c.medoid[own]);
          far = v;
        }
      }
      label[far] = k;
      c.medoid[k] = static_cast<NodeId>(far);
    }
    const bool stable = label == c.label;
    c.label = std::move(label);

    // Medoid update: the member minimizing summed distance; the current
    // medoid is kept on ties.
    for (std::size_t k = 0; k < K; ++k) {
      double best_sum = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        if (c.label[v] == k) best_sum += sym(c.medoid[k], v);
      }
      for (std::size_t cand = 0; cand < n; ++cand) {
        if (c.label[cand] != k) continue;
        double sum = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
          if (c.label[v] == k) sum += sym(cand, v);
        }
        if (sum < best_sum) {
          best_sum = sum;
          c.medoid[k] = static_cast<NodeId>(cand);
        }
      }
    }
    trace.cost_per_iteration.push_back(clustering_cost(sym, c));
    trace.iterations = iter + 1;
    if (stable) break;
  }

  trace.partition = partition_from_nodes(network, K, c.label);
  trace.partition.medoids = c.medoid;
  return trace;
}

Partition kmeans_cluster(const RoadNetwork& network, std::size_t K, std::uint64_t seed) {
  return kmeans_cluster_traced(network, K, seed).partition;
}

void write_partition(std::ostream& out, const Partition& partition) {
  out << "node\tcomponent\n";
  for (std::size_t v = 0; v < partition.node_component.size(); ++v) {
    out << v + 1 << '\t' << partition.node_component[v] << '\n';
  }
}

}  // namespace hmarl
