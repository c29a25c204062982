#include "herd/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <fmt/core.h>

#include "herd/error.hpp"

namespace herd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOffsetSlack = 1e-9;

bool tight(double via, double best) { return std::abs(via - best) <= 1e-9 * std::max(1.0, best); }

void check_on_pedestrian_edge(const RoadNetwork& net, EdgePosition p, const char* which) {
  if (to_size(p.edge) >= net.edge_count()) throw PreconditionError(fmt::format("{} position: bad edge index", which));
  const auto& e = net.edge(p.edge);
  if (!e.pedestrian) {
    throw PreconditionError(fmt::format("{} position is on non-pedestrian edge \"{}\"", which, e.id));
  }
  if (p.offset < -kOffsetSlack || p.offset > e.length + kOffsetSlack) {
    throw PreconditionError(fmt::format("{} offset {} outside edge \"{}\"", which, p.offset, e.id));
  }
}

double route_total(const RoadNetwork& net, const Route& r) {
  if (r.edges.size() == 1) return r.end_offset - r.start_offset;
  double total = net.length(r.edges.front()) - r.start_offset;
  for (std::size_t i = 1; i + 1 < r.edges.size(); ++i) total += net.length(r.edges[i]);
  return total + r.end_offset;
}

}  // namespace

std::vector<std::string> edge_ids(const RoadNetwork& net, const Route& route) {
  std::vector<std::string> ids;
  ids.reserve(route.edges.size());
  for (auto e : route.edges) ids.push_back(net.edge(e).id);
  return ids;
}

void validate_route(const RoadNetwork& net, const Route& route) {
  if (route.edges.empty()) throw ValidationError("route has no edges");
  for (std::size_t i = 0; i < route.edges.size(); ++i) {
    const auto e = route.edges[i];
    if (to_size(e) >= net.edge_count()) throw ValidationError("route references an unknown edge");
    if (!net.pedestrian(e)) {
      throw ValidationError(fmt::format("route edge \"{}\" is not pedestrian-allowed", net.edge(e).id));
    }
    if (i > 0 && net.to_node(route.edges[i - 1]) != net.from_node(e)) {
      throw ValidationError(fmt::format("route edges \"{}\" and \"{}\" are not connected",
                                        net.edge(route.edges[i - 1]).id, net.edge(e).id));
    }
  }
  const double first_len = net.length(route.edges.front());
  const double last_len = net.length(route.edges.back());
  if (route.start_offset < 0.0 || route.start_offset > first_len) {
    throw ValidationError(fmt::format("route start offset {} outside first edge", route.start_offset));
  }
  if (route.end_offset < 0.0 || route.end_offset > last_len) {
    throw ValidationError(fmt::format("route end offset {} outside last edge", route.end_offset));
  }
  if (route.edges.size() == 1 && route.end_offset < route.start_offset) {
    throw ValidationError("single-edge route ends before it starts");
  }
  if (std::abs(route_total(net, route) - route.total_length) > 1e-6) {
    throw ValidationError("route total_length does not match its edges");
  }
}

Route make_route(const RoadNetwork& net, const std::vector<std::string>& ids, double start_offset,
                 double end_offset) {
  Route r;
  r.edges.reserve(ids.size());
  for (const auto& id : ids) {
    auto e = net.find_edge(id);
    if (!e) throw ValidationError(fmt::format("route references missing edge \"{}\"", id));
    r.edges.push_back(*e);
  }
  if (r.edges.empty()) throw ValidationError("route has no edges");
  r.start_offset = start_offset;
  r.end_offset = end_offset;
  r.total_length = route_total(net, r);
  validate_route(net, r);
  return r;
}

double traversed_length(const RoadNetwork& net, const Route& route, std::size_t index) {
  const bool first = index == 0;
  const bool last = index + 1 == route.edges.size();
  const double begin = first ? route.start_offset : 0.0;
  const double end = last ? route.end_offset : net.length(route.edges[index]);
  return end - begin;
}

EdgePosition position_along(const RoadNetwork& net, const Route& route, double arc) {
  arc = std::clamp(arc, 0.0, route.total_length);
  for (std::size_t i = 0; i < route.edges.size(); ++i) {
    const double span = traversed_length(net, route, i);
    const double begin = i == 0 ? route.start_offset : 0.0;
    if (arc <= span || i + 1 == route.edges.size()) return {route.edges[i], begin + std::min(arc, span)};
    arc -= span;
  }
  return route.end();
}

Router::Router(const RoadNetwork& net) : net_(net) {}

const Router::DistanceField& Router::field_to(NodeIndex target) {
  auto& slot = fields_[static_cast<std::uint32_t>(target)];
  if (slot) return *slot;

  auto field = std::make_unique<DistanceField>(net_.node_count(), kInf);
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  (*field)[to_size(target)] = 0.0;
  frontier.emplace(0.0, static_cast<std::uint32_t>(target));
  while (!frontier.empty()) {
    auto [d, n] = frontier.top();
    frontier.pop();
    if (d > (*field)[n]) continue;
    for (auto e : net_.incoming(NodeIndex{n})) {
      const auto u = to_size(net_.from_node(e));
      const double via = d + net_.length(e);
      if (via < (*field)[u]) {
        (*field)[u] = via;
        frontier.emplace(via, static_cast<std::uint32_t>(u));
      }
    }
  }
  slot = std::move(field);
  return *slot;
}

bool Router::reachable(EdgePosition from, EdgePosition to) {
  if (from.edge == to.edge && to.offset >= from.offset) return true;
  return std::isfinite(field_to(net_.from_node(to.edge))[to_size(net_.to_node(from.edge))]);
}

Route Router::route(EdgePosition from, EdgePosition to) {
  check_on_pedestrian_edge(net_, from, "start");
  check_on_pedestrian_edge(net_, to, "end");
  from.offset = std::clamp(from.offset, 0.0, net_.length(from.edge));
  to.offset = std::clamp(to.offset, 0.0, net_.length(to.edge));

  Route r;
  r.start_offset = from.offset;
  r.end_offset = to.offset;
  if (from.edge == to.edge && to.offset >= from.offset) {
    r.edges.push_back(from.edge);
    r.total_length = to.offset - from.offset;
    return r;
  }

  const NodeIndex target = net_.from_node(to.edge);
  const auto& dist = field_to(target);
  NodeIndex at = net_.to_node(from.edge);
  if (!std::isfinite(dist[to_size(at)])) {
    throw UnreachableError(
        fmt::format("no pedestrian path from edge \"{}\" to edge \"{}\"", net_.edge(from.edge).id, net_.edge(to.edge).id));
  }

  r.edges.push_back(from.edge);
  // Walk tight edges, taking the smallest id first; outgoing() is id-sorted.
  while (at != target) {
    const double here = dist[to_size(at)];
    bool advanced = false;
    for (auto e : net_.outgoing(at)) {
      const auto next = net_.to_node(e);
      if (tight(net_.length(e) + dist[to_size(next)], here)) {
        r.edges.push_back(e);
        at = next;
        advanced = true;
        break;
      }
    }
    if (!advanced) throw UnreachableError("distance field inconsistent with network");
  }
  r.edges.push_back(to.edge);
  r.total_length = route_total(net_, r);
  return r;
}

Route shortest_path(const RoadNetwork& net, EdgePosition from, EdgePosition to) {
  Router router(net);
  return router.route(from, to);
}

}  // namespace herd
