#include "herd/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "herd/error.hpp"

namespace herd {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kLengthTolerance = 1e-3;
// Distances closer than this count as ties in nearest-edge search.
constexpr double kTieEpsilon = 1e-9;

using nlohmann::json;

double require_number(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ValidationError(fmt::format("{}: missing numeric field \"{}\"", where, key));
  }
  return it->get<double>();
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ValidationError(fmt::format("{}: missing string field \"{}\"", where, key));
  }
  return it->get<std::string>();
}

}  // namespace

bool GeoPoint::valid() const {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 && lon >= -180.0 &&
         lon <= 180.0;
}

RoadNetwork::RoadNetwork(GeoPoint geo_origin, std::vector<Node> nodes, std::vector<Edge> edges)
    : geo_origin_(geo_origin), nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (!geo_origin_.valid()) {
    throw ValidationError(
        fmt::format("geo_origin ({}, {}) is outside the valid lat/lon range", geo_origin_.lat, geo_origin_.lon));
  }
  node_by_id_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (!std::isfinite(n.x) || !std::isfinite(n.y)) {
      throw ValidationError(fmt::format("node \"{}\" has non-finite coordinates", n.id));
    }
    if (!node_by_id_.emplace(n.id, NodeIndex{static_cast<std::uint32_t>(i)}).second) {
      throw ValidationError(fmt::format("duplicate node id \"{}\"", n.id));
    }
  }

  edge_by_id_.reserve(edges_.size());
  edge_ends_.reserve(edges_.size());
  out_.resize(nodes_.size());
  in_.resize(nodes_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    const EdgeIndex idx{static_cast<std::uint32_t>(i)};
    if (!edge_by_id_.emplace(e.id, idx).second) {
      throw ValidationError(fmt::format("duplicate edge id \"{}\"", e.id));
    }
    auto from = node_by_id_.find(e.from);
    if (from == node_by_id_.end()) {
      throw ValidationError(fmt::format("edge \"{}\" references missing node \"{}\"", e.id, e.from));
    }
    auto to = node_by_id_.find(e.to);
    if (to == node_by_id_.end()) {
      throw ValidationError(fmt::format("edge \"{}\" references missing node \"{}\"", e.id, e.to));
    }
    if (!(e.length > 0.0) || !std::isfinite(e.length)) {
      throw ValidationError(fmt::format("edge \"{}\" has non-positive length {}", e.id, e.length));
    }
    const auto& a = nodes_[to_size(from->second)];
    const auto& b = nodes_[to_size(to->second)];
    const double euclid = std::hypot(b.x - a.x, b.y - a.y);
    if (std::abs(e.length - euclid) > kLengthTolerance * euclid) {
      throw ValidationError(fmt::format("edge \"{}\" length {} differs from node distance {} by more than 0.1%",
                                        e.id, e.length, euclid));
    }
    edge_ends_.emplace_back(from->second, to->second);
    if (e.pedestrian) {
      out_[to_size(from->second)].push_back(idx);
      in_[to_size(to->second)].push_back(idx);
      pedestrian_sorted_.push_back(idx);
    }
  }

  auto by_id = [this](EdgeIndex lhs, EdgeIndex rhs) { return edges_[to_size(lhs)].id < edges_[to_size(rhs)].id; };
  for (auto& list : out_) std::sort(list.begin(), list.end(), by_id);
  for (auto& list : in_) std::sort(list.begin(), list.end(), by_id);
  std::sort(pedestrian_sorted_.begin(), pedestrian_sorted_.end(), by_id);
}

std::optional<EdgeIndex> RoadNetwork::find_edge(std::string_view id) const {
  auto it = edge_by_id_.find(std::string(id));
  if (it == edge_by_id_.end()) return std::nullopt;
  return it->second;
}

EdgeIndex RoadNetwork::edge_index(std::string_view id) const {
  if (auto e = find_edge(id)) return *e;
  throw NotFound(fmt::format("unknown edge \"{}\"", id));
}

std::optional<NodeIndex> RoadNetwork::find_node(std::string_view id) const {
  auto it = node_by_id_.find(std::string(id));
  if (it == node_by_id_.end()) return std::nullopt;
  return it->second;
}

CartesianPoint RoadNetwork::node_point(NodeIndex n) const {
  const auto& node = nodes_[to_size(n)];
  return {node.x, node.y};
}

CartesianPoint RoadNetwork::point_at(EdgePosition p) const {
  const auto a = node_point(from_node(p.edge));
  const auto b = node_point(to_node(p.edge));
  const double t = std::clamp(p.offset / length(p.edge), 0.0, 1.0);
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

RoadNetwork parse_network(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw ParseError(fmt::format("network JSON: {}", ex.what()));
  }
  if (!doc.is_object()) throw ValidationError("network JSON: top level must be an object");

  auto origin_it = doc.find("geo_origin");
  if (origin_it == doc.end() || !origin_it->is_object()) {
    throw ValidationError("network JSON: missing \"geo_origin\" object");
  }
  const GeoPoint origin{require_number(*origin_it, "lat", "geo_origin"), require_number(*origin_it, "lon", "geo_origin")};

  auto nodes_it = doc.find("nodes");
  auto edges_it = doc.find("edges");
  if (nodes_it == doc.end() || !nodes_it->is_array()) throw ValidationError("network JSON: missing \"nodes\" array");
  if (edges_it == doc.end() || !edges_it->is_array()) throw ValidationError("network JSON: missing \"edges\" array");

  std::vector<Node> nodes;
  nodes.reserve(nodes_it->size());
  for (std::size_t i = 0; i < nodes_it->size(); ++i) {
    const auto& n = (*nodes_it)[i];
    const auto where = fmt::format("nodes[{}]", i);
    if (!n.is_object()) throw ValidationError(where + ": expected an object");
    nodes.push_back({require_string(n, "id", where), require_number(n, "x", where), require_number(n, "y", where)});
  }

  std::vector<Edge> edges;
  edges.reserve(edges_it->size());
  for (std::size_t i = 0; i < edges_it->size(); ++i) {
    const auto& e = (*edges_it)[i];
    const auto where = fmt::format("edges[{}]", i);
    if (!e.is_object()) throw ValidationError(where + ": expected an object");
    auto ped = e.find("pedestrian");
    if (ped == e.end() || !ped->is_boolean()) {
      throw ValidationError(fmt::format("{}: missing boolean field \"pedestrian\"", where));
    }
    edges.push_back({require_string(e, "id", where), require_string(e, "from", where), require_string(e, "to", where),
                     require_number(e, "length", where), ped->get<bool>()});
  }
  return RoadNetwork(origin, std::move(nodes), std::move(edges));
}

RoadNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open network file {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

std::string network_to_json(const RoadNetwork& net) {
  json doc;
  doc["geo_origin"] = {{"lat", net.geo_origin().lat}, {"lon", net.geo_origin().lon}};
  auto& nodes = doc["nodes"] = json::array();
  for (const auto& n : net.nodes()) nodes.push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}});
  auto& edges = doc["edges"] = json::array();
  for (const auto& e : net.edges()) {
    edges.push_back({{"id", e.id}, {"from", e.from}, {"to", e.to}, {"length", e.length}, {"pedestrian", e.pedestrian}});
  }
  return doc.dump(1);
}

void save_network(const RoadNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write network file {}", path.string()));
  out << network_to_json(net) << '\n';
}

RoadNetwork generate_grid(int rows, int cols, double spacing, GeoPoint geo_origin) {
  if (rows < 2 || cols < 2) {
    throw DimensionError(fmt::format("grid needs at least 2 rows and 2 columns, got {}x{}", rows, cols));
  }
  if (!(spacing > 0.0)) throw DimensionError(fmt::format("grid spacing must be positive, got {}", spacing));

  auto node_id = [](int r, int c) { return fmt::format("n{}_{}", r, c); };
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) nodes.push_back({node_id(r, c), c * spacing, r * spacing});
  }

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(2 * (rows * (cols - 1) + cols * (rows - 1))));
  auto link = [&](const std::string& a, const std::string& b) {
    edges.push_back({a + "-" + b, a, b, spacing, true});
    edges.push_back({b + "-" + a, b, a, spacing, true});
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) link(node_id(r, c), node_id(r, c + 1));
      if (r + 1 < rows) link(node_id(r, c), node_id(r + 1, c));
    }
  }
  return RoadNetwork(geo_origin, std::move(nodes), std::move(edges));
}

std::vector<std::string> pedestrian_edges(const RoadNetwork& net) {
  std::vector<std::string> ids;
  ids.reserve(net.pedestrian_edge_indices().size());
  for (auto e : net.pedestrian_edge_indices()) ids.push_back(net.edge(e).id);
  return ids;
}

CartesianPoint geo_to_cartesian(const RoadNetwork& net, GeoPoint p) {
  const auto& o = net.geo_origin();
  return {kEarthRadiusM * (p.lon - o.lon) * kDegToRad * std::cos(o.lat * kDegToRad),
          kEarthRadiusM * (p.lat - o.lat) * kDegToRad};
}

GeoPoint cartesian_to_geo(const RoadNetwork& net, CartesianPoint p) {
  const auto& o = net.geo_origin();
  return {o.lat + p.y / (kEarthRadiusM * kDegToRad),
          o.lon + p.x / (kEarthRadiusM * kDegToRad * std::cos(o.lat * kDegToRad))};
}

EdgeMatch project_onto_edge(const RoadNetwork& net, EdgeIndex e, CartesianPoint p) {
  const auto a = net.node_point(net.from_node(e));
  const auto b = net.node_point(net.to_node(e));
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double seg2 = dx * dx + dy * dy;
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / seg2, 0.0, 1.0);
  const double fx = a.x + t * dx;
  const double fy = a.y + t * dy;
  return {e, t * net.length(e), std::hypot(p.x - fx, p.y - fy)};
}

EdgeMatch nearest_edge(const RoadNetwork& net, CartesianPoint p) {
  const auto candidates = net.pedestrian_edge_indices();
  if (candidates.empty()) throw PreconditionError("nearest_edge: network has no pedestrian edges");
  EdgeMatch best{};
  best.distance = std::numeric_limits<double>::infinity();
  for (auto e : candidates) {
    auto m = project_onto_edge(net, e, p);
    if (m.distance < best.distance - kTieEpsilon) best = m;
  }
  return best;
}

}  // namespace herd
