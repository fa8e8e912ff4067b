#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hmarl/network.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(HMARL_DATA_DIR) + "/" + name; }

inline hmarl::RoadNetwork sioux_falls() { return hmarl::load_tntp_net(data_path("SiouxFalls/SiouxFalls_net.tntp")); }
inline hmarl::TripTable sioux_falls_trips() {
  return hmarl::load_tntp_trips(data_path("SiouxFalls/SiouxFalls_trips.tntp"));
}

struct E {
  hmarl::NodeId from;
  hmarl::NodeId to;
  double t = 1.0;
  double c = 100.0;
  double b = 0.15;
  double p = 4.0;
};

inline hmarl::RoadNetwork make_network(std::size_t n, const std::vector<E>& edges) {
  std::vector<hmarl::EdgeSpec> specs;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const E& e = edges[i];
    specs.push_back({static_cast<hmarl::EdgeId>(i), e.from, e.to, e.t, e.c, e.b, e.p});
  }
  return hmarl::RoadNetwork(n, std::move(specs));
}

/// Nodes 0..3; top route 0->1->3 (edges 0, 1), bottom route 0->2->3 (edges 2, 3).
inline hmarl::RoadNetwork diamond(double top = 1.0, double bottom = 2.0) {
  return make_network(4, {{0, 1, top, 100, 0, 1}, {1, 3, top, 100, 0, 1}, {0, 2, bottom, 100, 0, 1},
                          {2, 3, bottom, 100, 0.15, 4}});
}

/// Random digraph without self-loops or parallel edges, integer weights in [1, 9].
inline std::pair<hmarl::RoadNetwork, std::vector<double>> random_graph(std::mt19937_64& rng, std::size_t n,
                                                                       double density) {
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> weight(1, 9);
  std::vector<E> edges;
  std::vector<double> w;
  for (hmarl::NodeId u = 0; u < n; ++u) {
    for (hmarl::NodeId v = 0; v < n; ++v) {
      if (u != v && keep(rng)) {
        edges.push_back({u, v, 1.0});
        w.push_back(weight(rng));
      }
    }
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  return {make_network(n, edges), w};
}

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Single-source Bellman-Ford distances.
inline std::vector<double> bellman_ford(const hmarl::RoadNetwork& g, const std::vector<double>& w,
                                        hmarl::NodeId source) {
  std::vector<double> d(g.node_count(), kInf);
  d[source] = 0.0;
  for (std::size_t round = 0; round + 1 < g.node_count(); ++round) {
    for (const auto& e : g.edges()) {
      if (d[e.from] + w[e.id] < d[e.to]) d[e.to] = d[e.from] + w[e.id];
    }
  }
  return d;
}

/// Cost of the cheapest simple path by exhaustive depth-first enumeration.
inline double enumerate_best(const hmarl::RoadNetwork& g, const std::vector<double>& w, hmarl::NodeId from,
                             hmarl::NodeId to) {
  double best = kInf;
  std::vector<char> seen(g.node_count(), 0);
  std::function<void(hmarl::NodeId, double)> dfs = [&](hmarl::NodeId v, double cost) {
    if (v == to) {
      best = std::min(best, cost);
      return;
    }
    seen[v] = 1;
    for (hmarl::EdgeId e : g.out_edges(v)) {
      const hmarl::NodeId u = g.edge(e).to;
      if (!seen[u]) dfs(u, cost + w[e]);
    }
    seen[v] = 0;
  };
  dfs(from, 0.0);
  return best;
}

}  // namespace testing
