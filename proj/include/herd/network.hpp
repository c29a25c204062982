#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace herd {

enum class NodeIndex : std::uint32_t {};
enum class EdgeIndex : std::uint32_t {};

constexpr std::size_t to_size(NodeIndex i) { return static_cast<std::size_t>(i); }
constexpr std::size_t to_size(EdgeIndex i) { return static_cast<std::size_t>(i); }

inline constexpr double kEarthRadiusM = 6'371'000.0;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  [[nodiscard]] bool valid() const;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct CartesianPoint {
  double x = 0.0;  // metres east of the geo origin
  double y = 0.0;  // metres north of the geo origin

  friend bool operator==(const CartesianPoint&, const CartesianPoint&) = default;
};

struct Node {
  std::string id;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;
  bool pedestrian = true;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// A point `offset` metres along a directed edge.
struct EdgePosition {
  EdgeIndex edge{};
  double offset = 0.0;

  friend bool operator==(const EdgePosition&, const EdgePosition&) = default;
};

/// Result of snapping a point onto the network.
struct EdgeMatch {
  EdgeIndex edge{};
  double offset = 0.0;
  double distance = 0.0;
};

/// Directed road graph. Immutable once constructed; the constructor enforces
/// id uniqueness, node references and edge lengths (positive, within 0.1% of
/// the straight-line node distance).
class RoadNetwork {
 public:
  RoadNetwork(GeoPoint geo_origin, std::vector<Node> nodes, std::vector<Edge> edges);

  [[nodiscard]] const GeoPoint& geo_origin() const { return geo_origin_; }
  [[nodiscard]] std::span<const Node> nodes() const { return nodes_; }
  [[nodiscard]] std::span<const Edge> edges() const { return edges_; }

  [[nodiscard]] const Edge& edge(EdgeIndex e) const { return edges_[to_size(e)]; }
  [[nodiscard]] const Node& node(NodeIndex n) const { return nodes_[to_size(n)]; }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }

  [[nodiscard]] std::optional<EdgeIndex> find_edge(std::string_view id) const;
  /// Throws NotFound for unknown ids.
  [[nodiscard]] EdgeIndex edge_index(std::string_view id) const;
  [[nodiscard]] std::optional<NodeIndex> find_node(std::string_view id) const;

  [[nodiscard]] NodeIndex from_node(EdgeIndex e) const { return edge_ends_[to_size(e)].first; }
  [[nodiscard]] NodeIndex to_node(EdgeIndex e) const { return edge_ends_[to_size(e)].second; }
  [[nodiscard]] double length(EdgeIndex e) const { return edges_[to_size(e)].length; }
  [[nodiscard]] bool pedestrian(EdgeIndex e) const { return edges_[to_size(e)].pedestrian; }

  /// Pedestrian-allowed edges leaving `n`, ordered by edge id.
  [[nodiscard]] std::span<const EdgeIndex> outgoing(NodeIndex n) const { return out_[to_size(n)]; }
  /// Pedestrian-allowed edges entering `n`.
  [[nodiscard]] std::span<const EdgeIndex> incoming(NodeIndex n) const { return in_[to_size(n)]; }
  /// Pedestrian-allowed edges ordered by edge id.
  [[nodiscard]] std::span<const EdgeIndex> pedestrian_edge_indices() const { return pedestrian_sorted_; }

  [[nodiscard]] CartesianPoint node_point(NodeIndex n) const;
  /// Point at a position, interpolated linearly between the edge's nodes.
  [[nodiscard]] CartesianPoint point_at(EdgePosition p) const;

  friend bool operator==(const RoadNetwork& a, const RoadNetwork& b) {
    return a.geo_origin_ == b.geo_origin_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  GeoPoint geo_origin_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;

  std::unordered_map<std::string, NodeIndex> node_by_id_;
  std::unordered_map<std::string, EdgeIndex> edge_by_id_;
  std::vector<std::pair<NodeIndex, NodeIndex>> edge_ends_;
  std::vector<std::vector<EdgeIndex>> out_;
  std::vector<std::vector<EdgeIndex>> in_;
  std::vector<EdgeIndex> pedestrian_sorted_;
};

/// Parses the network JSON format. Throws ParseError or ValidationError.
[[nodiscard]] RoadNetwork parse_network(std::string_view json_text);
[[nodiscard]] RoadNetwork load_network(const std::filesystem::path& path);
[[nodiscard]] std::string network_to_json(const RoadNetwork& net);
void save_network(const RoadNetwork& net, const std::filesystem::path& path);

/// Rectangular grid with bidirectional pedestrian edges between neighbours.
/// Node "n{r}_{c}" sits at (c * spacing, r * spacing); edges are named
/// "{from}-{to}".
[[nodiscard]] RoadNetwork generate_grid(int rows, int cols, double spacing, GeoPoint geo_origin);

[[nodiscard]] std::vector<std::string> pedestrian_edges(const RoadNetwork& net);

/// Local equirectangular projection about the network's geo origin.
[[nodiscard]] CartesianPoint geo_to_cartesian(const RoadNetwork& net, GeoPoint p);
[[nodiscard]] GeoPoint cartesian_to_geo(const RoadNetwork& net, CartesianPoint p);

/// Closest pedestrian-allowed edge by point-to-segment distance; ties go to
/// the smallest edge id. Precondition: at least one pedestrian edge.
[[nodiscard]] EdgeMatch nearest_edge(const RoadNetwork& net, CartesianPoint p);

/// Distance from `p` to the segment of edge `e` and the offset of the foot point.
[[nodiscard]] EdgeMatch project_onto_edge(const RoadNetwork& net, EdgeIndex e, CartesianPoint p);

}  // namespace herd
