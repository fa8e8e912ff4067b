#include "hmarl/network.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace hmarl {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

RoadNetwork::RoadNetwork(std::size_t node_count, std::vector<EdgeSpec> edges)
    : node_count_(node_count), edges_(std::move(edges)), out_(node_count), in_(node_count) {
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    EdgeSpec& e = edges_[i];
    e.id = static_cast<EdgeId>(i);
    const std::string tag = "edge " + std::to_string(i);
    if (e.from >= node_count_ || e.to >= node_count_) {
      throw std::invalid_argument(tag + ": endpoint out of range");
    }
    if (e.from == e.to) throw std::invalid_argument(tag + ": self-loop");
    if (!(e.free_flow_time > 0.0)) throw std::invalid_argument(tag + ": free-flow time must be > 0");
    if (!(e.capacity > 0.0)) throw std::invalid_argument(tag + ": capacity must be > 0");
    if (!(e.b >= 0.0)) throw std::invalid_argument(tag + ": b must be >= 0");
    if (!(e.power >= 0.0)) throw std::invalid_argument(tag + ": power must be >= 0");
    out_[e.from].push_back(e.id);
    in_[e.to].push_back(e.id);
  }
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<long long> to_integer(std::string_view s) {
  const auto value = to_double(s);
  if (!value || *value != static_cast<double>(static_cast<long long>(*value))) return std::nullopt;
  return static_cast<long long>(*value);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

/// Splits "<KEY> value" metadata lines. Returns false for other lines.
bool parse_metadata(std::string_view line, std::string& key, std::string& value) {
  if (line.empty() || line.front() != '<') return false;
  const auto close = line.find('>');
  if (close == std::string_view::npos) return false;
  key = std::string(trim(line.substr(1, close - 1)));
  value = std::string(trim(line.substr(close + 1)));
  return true;
}

std::string strip_comment(std::string_view line) {
  const auto tilde = line.find('~');
  return std::string(trim(tilde == std::string_view::npos ? line : line.substr(0, tilde)));
}

}  // namespace

RoadNetwork parse_tntp_net(std::istream& in) {
  std::optional<long long> declared_nodes;
  std::optional<long long> declared_links;
  std::vector<EdgeSpec> edges;
  std::string raw;
  std::size_t line_no = 0;
  std::size_t last_line = 0;
  bool in_metadata = true;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    std::string key;
    std::string value;
    if (in_metadata && parse_metadata(line, key, value)) {
      if (key == "END OF METADATA") {
        in_metadata = false;
      } else if (key == "NUMBER OF NODES" || key == "NUMBER OF LINKS") {
        const auto n = to_integer(value);
        if (!n || *n < 0) throw ParseError(line_no, "malformed header <" + key + ">");
        (key == "NUMBER OF NODES" ? declared_nodes : declared_links) = *n;
      }
      continue;
    }
    const std::string body = strip_comment(line);
    if (body.empty()) continue;
    in_metadata = false;
    if (!declared_nodes || !declared_links) {
      throw ParseError(line_no, "data row before <NUMBER OF NODES> and <NUMBER OF LINKS> headers");
    }

    std::string_view row = body;
    if (!row.empty() && row.back() == ';') row = trim(row.substr(0, row.size() - 1));
    const auto fields = split_ws(row);
    if (fields.size() < 7 || fields.size() > 10) {
      throw ParseError(line_no, "expected 7 to 10 columns, found " + std::to_string(fields.size()));
    }
    double values[10] = {};
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto v = to_double(fields[i]);
      if (!v) throw ParseError(line_no, "non-numeric field '" + std::string(fields[i]) + "'");
      values[i] = *v;
    }
    const auto check_node = [&](double raw_id, const char* which) {
      const auto id = static_cast<long long>(raw_id);
      if (static_cast<double>(id) != raw_id || id < 1 || id > *declared_nodes) {
        throw ParseError(line_no, std::string(which) + " node " + std::to_string(raw_id) +
                                      " outside declared range 1.." + std::to_string(*declared_nodes));
      }
      return static_cast<NodeId>(id - 1);
    };
    EdgeSpec e;
    e.id = static_cast<EdgeId>(edges.size());
    e.from = check_node(values[0], "init");
    e.to = check_node(values[1], "term");
    e.capacity = values[2];
    e.free_flow_time = values[4];
    e.b = values[5];
    e.power = values[6];
    if (e.from == e.to) throw ParseError(line_no, "self-loop");
    if (!(e.capacity > 0.0)) throw ParseError(line_no, "capacity must be > 0");
    if (!(e.free_flow_time > 0.0)) throw ParseError(line_no, "free-flow time must be > 0");
    if (e.b < 0.0 || e.power < 0.0) throw ParseError(line_no, "B and power must be >= 0");
    edges.push_back(e);
    last_line = line_no;
  }

  if (!declared_nodes || !declared_links) {
    throw ParseError(line_no, "missing <NUMBER OF NODES> or <NUMBER OF LINKS> header");
  }
  if (static_cast<long long>(edges.size()) != *declared_links) {
    throw ParseError(last_line == 0 ? line_no : last_line,
                     "link count mismatch: header declares " + std::to_string(*declared_links) +
                         ", file contains " + std::to_string(edges.size()));
  }
  return RoadNetwork(static_cast<std::size_t>(*declared_nodes), std::move(edges));
}

TripTable parse_tntp_trips(std::istream& in) {
  std::optional<long long> zones;
  std::optional<NodeId> origin;
  TripTable trips;
  std::string raw;
  std::size_t line_no = 0;
  bool in_metadata = true;

  const auto zone_id = [&](std::string_view text, std::size_t line) {
    const auto id = to_integer(text);
    if (!id) throw ParseError(line, "non-numeric zone id '" + std::string(trim(text)) + "'");
    if (*id < 1 || *id > *zones) {
      throw ParseError(line, "unknown zone id " + std::to_string(*id));
    }
    return static_cast<NodeId>(*id - 1);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    std::string key;
    std::string value;
    if (in_metadata && parse_metadata(line, key, value)) {
      if (key == "END OF METADATA") {
        in_metadata = false;
      } else if (key == "NUMBER OF ZONES") {
        const auto n = to_integer(value);
        if (!n || *n < 0) throw ParseError(line_no, "malformed header <NUMBER OF ZONES>");
        zones = *n;
      }
      continue;
    }
    const std::string body = strip_comment(line);
    if (body.empty()) continue;
    in_metadata = false;
    if (!zones) throw ParseError(line_no, "data before <NUMBER OF ZONES> header");

    std::string_view rest = body;
    if (rest.rfind("Origin", 0) == 0) {
      origin = zone_id(rest.substr(6), line_no);
      continue;
    }
    if (!origin) throw ParseError(line_no, "destination entry before any 'Origin' line");
    while (!trim(rest).empty()) {
      const auto semi = rest.find(';');
      const std::string_view pair = trim(rest.substr(0, semi));
      rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
      if (pair.empty()) continue;
      const auto colon = pair.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected 'destination : flow', found '" + std::string(pair) + "'");
      }
      const NodeId dest = zone_id(pair.substr(0, colon), line_no);
      const auto flow = to_double(pair.substr(colon + 1));
      if (!flow) throw ParseError(line_no, "non-numeric flow in '" + std::string(pair) + "'");
      if (*flow < 0.0) throw ParseError(line_no, "negative flow in '" + std::string(pair) + "'");
      if (*flow > 0.0 && dest != *origin) trips.push_back({*origin, dest, *flow});
    }
  }
  return trips;
}

RoadNetwork load_tntp_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file " + path);
  try {
    return parse_tntp_net(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

TripTable load_tntp_trips(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trips file " + path);
  try {
    return parse_tntp_trips(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_tntp_net(std::ostream& out, const RoadNetwork& network) {
  out << "<NUMBER OF ZONES> " << network.node_count() << '\n'
      << "<NUMBER OF NODES> " << network.node_count() << '\n'
      << "<FIRST THRU NODE> 1\n"
      << "<NUMBER OF LINKS> " << network.edge_count() << '\n'
      << "<END OF METADATA>\n\n\n"
      << "~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (const EdgeSpec& e : network.edges()) {
    out << '\t' << e.from + 1 << '\t' << e.to + 1 << '\t' << e.capacity << '\t' << e.free_flow_time
        << '\t' << e.free_flow_time << '\t' << e.b << '\t' << e.power << "\t0\t0\t1\t;\n";
  }
  out.precision(old_precision);
}

TripTable scale_demand(const TripTable& trips, std::span<const double> factor_per_trip) {
  if (factor_per_trip.size() != trips.size()) {
    throw std::invalid_argument("scale_demand: expected " + std::to_string(trips.size()) +
                                " factors, got " + std::to_string(factor_per_trip.size()));
  }
  TripTable scaled = trips;
  for (std::size_t r = 0; r < trips.size(); ++r) {
    if (!(factor_per_trip[r] > 0.0)) {
      throw std::invalid_argument("scale_demand: factor for trip " + std::to_string(r) + " must be > 0");
    }
    scaled[r].size = trips[r].size * factor_per_trip[r];
  }
  return scaled;
}

double total_demand(const TripTable& trips) {
  double total = 0.0;
  for (const Trip& t : trips) total += t.size;
  return total;
}

namespace {
std::size_t reach_count(const RoadNetwork& net, bool forward) {
  std::vector<char> seen(net.node_count(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (EdgeId e : forward ? net.out_edges(v) : net.in_edges(v)) {
      const NodeId u = forward ? net.edge(e).to : net.edge(e).from;
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count;
}
}  // namespace

bool is_strongly_connected(const RoadNetwork& network) {
  if (network.node_count() <= 1) return true;
  return reach_count(network, true) == network.node_count() &&
         reach_count(network, false) == network.node_count();
}

void check_trips(const RoadNetwork& network, const TripTable& trips) {
  for (std::size_t r = 0; r < trips.size(); ++r) {
    const Trip& t = trips[r];
    if (t.origin >= network.node_count() || t.destination >= network.node_count()) {
      throw std::invalid_argument("trip " + std::to_string(r) + " references a node outside the network");
    }
    if (!(t.size >= 0.0)) throw std::invalid_argument("trip " + std::to_string(r) + " has negative size");
  }
}

}  // namespace hmarl
