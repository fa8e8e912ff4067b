#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "hmarl/decompose.hpp"
#include "support.hpp"

using namespace hmarl;

namespace {

std::vector<std::vector<double>> floyd_warshall(const RoadNetwork& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, testing::kInf));
  for (std::size_t v = 0; v < n; ++v) d[v][v] = 0.0;
  for (const EdgeSpec& e : g.edges()) d[e.from][e.to] = std::min(d[e.from][e.to], e.free_flow_time);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }
  return d;
}

void check_partition(const RoadNetwork& g, const Partition& p) {
  REQUIRE(p.node_component.size() == g.node_count());
  REQUIRE(p.edge_component.size() == g.edge_count());
  std::size_t nodes = 0, edges = 0;
  std::set<EdgeId> seen;
  for (std::size_t k = 0; k < p.K; ++k) {
    CHECK_FALSE(p.component_nodes(k).empty());
    nodes += p.component_nodes(k).size();
    for (EdgeId e : p.component_edges(k)) {
      CHECK(seen.insert(e).second);
      ++edges;
    }
  }
  CHECK(nodes == g.node_count());
  CHECK(edges == g.edge_count());
  for (const EdgeSpec& e : g.edges()) CHECK(p.edge_component[e.id] == p.node_component[e.from]);
}

}  // namespace

TEST_SUITE("decompose") {
  TEST_CASE("free-flow distances") {
    const RoadNetwork two = testing::make_network(2, {{0, 1, 5.0}});
    const DistanceMatrix d = free_flow_distances(two);
    CHECK(d(0, 0) == 0.0);
    CHECK(d(1, 1) == 0.0);
    CHECK(d(0, 1) == 5.0);
    CHECK(d(1, 0) == testing::kInf);
  }

  TEST_CASE("free-flow distances match Floyd-Warshall") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 40; ++rep) {
      auto [g0, w] = testing::random_graph(rng, 8, 0.3);
      std::vector<EdgeSpec> specs = g0.edges();
      for (EdgeSpec& e : specs) e.free_flow_time = w[e.id];
      const RoadNetwork g(8, specs);
      const auto oracle = floyd_warshall(g);
      const DistanceMatrix d = free_flow_distances(g);
      for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 8; ++j) CHECK(d(i, j) == oracle[i][j]);
      }
    }
  }

  TEST_CASE("degenerate cluster counts") {
    const RoadNetwork g = testing::sioux_falls();
    const Partition one = kmeans_cluster(g, 1, 0);
    CHECK(one.K == 1);
    check_partition(g, one);
    const Partition all = kmeans_cluster(g, g.node_count(), 0);
    check_partition(g, all);
    CHECK_THROWS_AS(kmeans_cluster(g, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(kmeans_cluster(g, 25, 0), std::invalid_argument);
    CHECK_THROWS_AS(kmeans_cluster(testing::make_network(3, {{0, 1}, {1, 2}}), 2, 0), std::invalid_argument);
  }

  TEST_CASE("Sioux Falls with four components") {
    const RoadNetwork g = testing::sioux_falls();
    for (std::uint64_t seed : {0u, 1u, 2u, 99u}) {
      const ClusteringTrace t = kmeans_cluster_traced(g, 4, seed);
      CHECK(t.partition.K == 4);
      check_partition(g, t.partition);
      for (std::size_t i = 1; i < t.cost_per_iteration.size(); ++i) {
        CHECK(t.cost_per_iteration[i] <= t.cost_per_iteration[i - 1]);
      }
      for (std::size_t k = 0; k < 4; ++k) CHECK(t.partition.node_component[t.partition.medoids[k]] == k);
      const Partition again = kmeans_cluster(g, 4, seed);
      CHECK(again.node_component == t.partition.node_component);
    }
  }

  TEST_CASE("random strongly connected graphs cluster into valid partitions") {
    std::mt19937_64 rng(29);
    int tested = 0;
    for (int rep = 0; rep < 100 && tested < 25; ++rep) {
      auto [g, w] = testing::random_graph(rng, 10, 0.35);
      if (!is_strongly_connected(g)) continue;
      ++tested;
      for (std::size_t K = 1; K <= 5; ++K) {
        const ClusteringTrace t = kmeans_cluster_traced(g, K, rep);
        check_partition(g, t.partition);
        for (std::size_t i = 1; i < t.cost_per_iteration.size(); ++i) {
          CHECK(t.cost_per_iteration[i] <= t.cost_per_iteration[i - 1] + 1e-12);
        }
      }
    }
    CHECK(tested > 0);
  }

  TEST_CASE("partition map output") {
    const RoadNetwork g = testing::make_network(3, {{0, 1}, {1, 2}, {2, 0}});
    const Partition p = partition_from_nodes(g, 2, {0, 1, 1});
    std::ostringstream out;
    write_partition(out, p);
    CHECK(out.str() == "node\tcomponent\n1\t0\n2\t1\n3\t1\n");
    CHECK(p.edge_component == std::vector<std::size_t>{0, 1, 1});
    CHECK_THROWS_AS(partition_from_nodes(g, 2, {0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(partition_from_nodes(g, 2, {0, 2, 1}), std::invalid_argument);
  }
}
