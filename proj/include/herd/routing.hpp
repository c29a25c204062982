#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "herd/network.hpp"

namespace herd {

/// Connected walk over directed edges, starting `start_offset` metres into
/// the first edge and stopping `end_offset` metres into the last.
struct Route {
  std::vector<EdgeIndex> edges;
  double start_offset = 0.0;
  double end_offset = 0.0;
  double total_length = 0.0;

  [[nodiscard]] EdgePosition start() const { return {edges.front(), start_offset}; }
  [[nodiscard]] EdgePosition end() const { return {edges.back(), end_offset}; }

  friend bool operator==(const Route&, const Route&) = default;
};

[[nodiscard]] std::vector<std::string> edge_ids(const RoadNetwork& net, const Route& route);

/// Builds a route from explicit edge ids, checking connectivity, pedestrian
/// permission and offset bounds. Throws ValidationError.
[[nodiscard]] Route make_route(const RoadNetwork& net, const std::vector<std::string>& ids, double start_offset,
                               double end_offset);

/// Throws ValidationError unless `route` satisfies the Route invariants.
void validate_route(const RoadNetwork& net, const Route& route);

/// Length of the part of edge `index` of `route` that the route traverses.
[[nodiscard]] double traversed_length(const RoadNetwork& net, const Route& route, std::size_t index);

/// Point `arc` metres along the route (clamped to [0, total_length]).
[[nodiscard]] EdgePosition position_along(const RoadNetwork& net, const Route& route, double arc);

/// Shortest pedestrian routing with a cache of per-target distance fields.
/// Equal-length alternatives resolve to the lexicographically smallest
/// edge-id sequence. Not thread-safe; use one Router per thread.
class Router {
 public:
  explicit Router(const RoadNetwork& net);

  /// Throws UnreachableError when no pedestrian path exists and
  /// PreconditionError when an endpoint is not on a pedestrian edge.
  [[nodiscard]] Route route(EdgePosition from, EdgePosition to);

  /// True if a pedestrian path exists from `from` to `to`.
  [[nodiscard]] bool reachable(EdgePosition from, EdgePosition to);

  [[nodiscard]] const RoadNetwork& network() const { return net_; }

 private:
  // dist[n] = shortest pedestrian distance from node n to the target node.
  using DistanceField = std::vector<double>;
  const DistanceField& field_to(NodeIndex target);

  const RoadNetwork& net_;
  std::unordered_map<std::uint32_t, std::unique_ptr<DistanceField>> fields_;
};

[[nodiscard]] Route shortest_path(const RoadNetwork& net, EdgePosition from, EdgePosition to);

}  // namespace herd
