#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmarl {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Raised for malformed TNTP input. The message names the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// One directed road segment with its volume-delay parameters.
struct EdgeSpec {
  EdgeId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  double free_flow_time = 1.0;  // t_e
  double capacity = 1.0;        // c_e
  double b = 0.0;               // b_e
  double power = 0.0;           // p_e

  bool operator==(const EdgeSpec&) const = default;
};

/// Directed road graph. Edge ids are dense and equal to the position in
/// edges(); node ids are 0-based.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  /// Validates every edge and builds adjacency. Throws std::invalid_argument.
  RoadNetwork(std::size_t node_count, std::vector<EdgeSpec> edges);

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<EdgeSpec>& edges() const noexcept { return edges_; }
  const EdgeSpec& edge(EdgeId e) const { return edges_.at(e); }
  std::span<const EdgeId> out_edges(NodeId v) const { return out_.at(v); }
  std::span<const EdgeId> in_edges(NodeId v) const { return in_.at(v); }

  bool operator==(const RoadNetwork& other) const {
    return node_count_ == other.node_count_ && edges_ == other.edges_;
  }

 private:
  std::size_t node_count_ = 0;
  std::vector<EdgeSpec> edges_;
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
};

struct Trip {
  NodeId origin = 0;
  NodeId destination = 0;
  double size = 0.0;  // vehicles, real-valued

  bool operator==(const Trip&) const = default;
};

using TripTable = std::vector<Trip>;

RoadNetwork parse_tntp_net(std::istream& in);
/// Keeps trips with positive flow and origin != destination.
TripTable parse_tntp_trips(std::istream& in);

RoadNetwork load_tntp_net(const std::string& path);
TripTable load_tntp_trips(const std::string& path);

/// Writes a network in the TNTP layout accepted by parse_tntp_net.
void write_tntp_net(std::ostream& out, const RoadNetwork& network);

/// s_r' = s_r * factor_r. Throws std::invalid_argument on a size mismatch or
/// a nonpositive factor.
TripTable scale_demand(const TripTable& trips, std::span<const double> factor_per_trip);

double total_demand(const TripTable& trips);

/// True when every node reaches every other node.
bool is_strongly_connected(const RoadNetwork& network);

/// Throws std::invalid_argument if a trip references a node outside the network.
void check_trips(const RoadNetwork& network, const TripTable& trips);

}  // namespace hmarl
