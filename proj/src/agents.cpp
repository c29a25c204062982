#include "herd/agents.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "herd/error.hpp"

namespace herd {

namespace {

constexpr int kMaxDestinationDraws = 100;

}  // namespace

std::string_view to_string(AgentStatus s) {
  switch (s) {
    case AgentStatus::Normal: return "Normal";
    case AgentStatus::ToIncentivised: return "ToIncentivised";
    case AgentStatus::OnIncentivised: return "OnIncentivised";
    case AgentStatus::Returning: return "Returning";
    case AgentStatus::Arrived: return "Arrived";
  }
  return "?";
}

void DecisionCurve::validate() const {
  if (!(p_max > 0.0 && p_max <= kThresholdUpper)) {
    throw ValidationError(fmt::format("decision curve p_max must be in (0, 0.25], got {}", p_max));
  }
  if (!(pi_sat > 0.0)) throw ValidationError(fmt::format("decision curve pi_sat must be positive, got {}", pi_sat));
}

void Agent::follow(Route next) {
  route = std::move(next);
  route_index = 0;
  offset = route.start_offset;
  route_progress = 0.0;
  next_waypoint = 0;
}

EdgePosition random_position(const RoadNetwork& net, RandomSource& rng) {
  const auto edges = net.pedestrian_edge_indices();
  if (edges.empty()) throw SpawnError("network has no pedestrian edges");
  double total = 0.0;
  for (auto e : edges) total += net.length(e);
  double arc = rng.uniform(0.0, total);
  for (auto e : edges) {
    const double len = net.length(e);
    if (arc < len) return {e, arc};
    arc -= len;
  }
  return {edges.back(), net.length(edges.back())};
}

std::vector<Agent> spawn_agents(Router& router, std::size_t n, RandomSource& rng) {
  const auto& net = router.network();
  std::vector<Agent> agents;
  agents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Agent a;
    a.id = fmt::format("p{}", i);
    a.origin = random_position(net, rng);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxDestinationDraws && !placed; ++attempt) {
      a.destination = random_position(net, rng);
      placed = router.reachable(a.origin, a.destination);
    }
    if (!placed) {
      throw SpawnError(fmt::format("agent {}: no reachable destination from edge \"{}\" after {} draws", a.id,
                                   net.edge(a.origin.edge).id, kMaxDestinationDraws));
    }
    a.follow(router.route(a.origin, a.destination));
    agents.push_back(std::move(a));
  }
  return agents;
}

std::vector<Agent> spawn_agents(const RoadNetwork& net, std::size_t n, RandomSource& rng) {
  Router router(net);
  return spawn_agents(router, n, rng);
}

double acceptance_probability(double price, const DecisionCurve& curve) {
  return std::clamp(price / curve.pi_sat, 0.0, 1.0) * curve.p_max;
}

bool accepts(double price, const DecisionCurve& curve, double threshold) {
  return threshold < acceptance_probability(price, curve);
}

bool decide(double price, const DecisionCurve& curve, RandomSource& rng) {
  return accepts(price, curve, rng.uniform(0.0, kThresholdUpper));
}

AdvanceResult walk(Agent& agent, const RoadNetwork& net, double distance) {
  if (agent.status == AgentStatus::Arrived) {
    throw PreconditionError(fmt::format("agent {} has already arrived", agent.id));
  }
  AdvanceResult result;
  double remaining = distance;
  const std::size_t last = agent.route.edges.size() - 1;
  while (true) {
    const bool on_last = agent.route_index == last;
    const double edge_end = on_last ? agent.route.end_offset : net.length(agent.route.edges[agent.route_index]);
    const double available = std::max(0.0, edge_end - agent.offset);
    if (remaining < available) {
      agent.offset += remaining;
      agent.route_progress += remaining;
      agent.distance_walked += remaining;
      remaining = 0.0;
      break;
    }
    agent.offset = edge_end;
    agent.route_progress += available;
    agent.distance_walked += available;
    remaining -= available;
    if (on_last) {
      result.route_completed = true;
      break;
    }
    ++agent.route_index;
    agent.offset = 0.0;
    ++result.edges_completed;
  }
  result.leftover_m = remaining;
  if (result.route_completed &&
      (agent.status == AgentStatus::Normal || agent.status == AgentStatus::Returning)) {
    agent.status = AgentStatus::Arrived;
  }
  return result;
}

AdvanceResult advance(Agent& agent, const RoadNetwork& net, double dt) {
  if (!(dt > 0.0)) throw PreconditionError(fmt::format("advance: dt must be positive, got {}", dt));
  return walk(agent, net, agent.speed * dt);
}

}  // namespace herd
