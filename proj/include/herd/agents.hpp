#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "herd/network.hpp"
#include "herd/random.hpp"
#include "herd/routing.hpp"

namespace herd {

inline constexpr double kWalkingSpeed = 1.4;  // m/s
/// Upper bound of the uniform threshold each acceptance draw is compared to.
inline constexpr double kThresholdUpper = 0.25;

enum class AgentStatus : std::uint8_t { Normal, ToIncentivised, OnIncentivised, Returning, Arrived };

[[nodiscard]] std::string_view to_string(AgentStatus s);

/// True for the statuses that count towards agents-on.
constexpr bool committed(AgentStatus s) {
  return s == AgentStatus::ToIncentivised || s == AgentStatus::OnIncentivised;
}

/// Piecewise-linear price acceptance: rises from 0 at price 0 to p_max at
/// pi_sat and stays flat above.
struct DecisionCurve {
  double p_max = 0.25;
  double pi_sat = 200.0;

  /// Throws ValidationError unless 0 < p_max <= 0.25 and pi_sat > 0.
  void validate() const;
};

struct Agent {
  std::string id;
  EdgePosition origin;
  EdgePosition destination;
  Route route;
  std::size_t route_index = 0;  // edge of `route` the agent is on
  double offset = 0.0;          // metres along that edge
  double speed = kWalkingSpeed;
  AgentStatus status = AgentStatus::Normal;
  std::optional<std::size_t> incentivised_route;
  std::size_t checkpoints_passed = 0;
  bool is_external = false;

  double distance_walked = 0.0;
  double route_progress = 0.0;     // arc length covered on `route`
  std::size_t next_waypoint = 0;  // first waypoint not yet checkpointed

  [[nodiscard]] EdgePosition position() const { return {route.edges[route_index], offset}; }

  /// Replaces the current route; the agent is placed at its start.
  void follow(Route next);
};

struct AdvanceResult {
  std::uint32_t edges_completed = 0;
  bool route_completed = false;
  double leftover_m = 0.0;  // travel budget not used because the route ended
};

/// Spawns agents "p0".."p{n-1}" at positions drawn uniformly over the
/// pedestrian network, each with a reachable destination and a shortest
/// route to it. Throws SpawnError after 100 failed destination draws.
[[nodiscard]] std::vector<Agent> spawn_agents(const RoadNetwork& net, std::size_t n, RandomSource& rng);
[[nodiscard]] std::vector<Agent> spawn_agents(Router& router, std::size_t n, RandomSource& rng);

/// Uniform draw over all pedestrian-edge positions, weighted by length.
[[nodiscard]] EdgePosition random_position(const RoadNetwork& net, RandomSource& rng);

[[nodiscard]] double acceptance_probability(double price, const DecisionCurve& curve);

/// Accept iff `threshold` < acceptance_probability(price).
[[nodiscard]] bool accepts(double price, const DecisionCurve& curve, double threshold);

/// Draws a threshold from Uniform(0, 0.25) and applies `accepts`.
[[nodiscard]] bool decide(double price, const DecisionCurve& curve, RandomSource& rng);

/// Moves the agent speed * dt metres along its route. Sets Arrived when a
/// Normal or Returning agent reaches the end of its route. Throws
/// PreconditionError for an Arrived agent or non-positive dt.
AdvanceResult advance(Agent& agent, const RoadNetwork& net, double dt);

/// Same as advance() with an explicit distance budget in metres.
AdvanceResult walk(Agent& agent, const RoadNetwork& net, double distance);

}  // namespace herd
