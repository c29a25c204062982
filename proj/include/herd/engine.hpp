#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "herd/agents.hpp"
#include "herd/config.hpp"
#include "herd/ledger.hpp"
#include "herd/network.hpp"
#include "herd/pricing.hpp"
#include "herd/random.hpp"
#include "herd/routing.hpp"

namespace herd {

/// A configured incentivised route with its checkpoint waypoints.
struct IncentivisedRoute {
  std::string id;
  Route route;
  std::vector<double> waypoint_arcs;  // 0, s, 2s, ... and the route end
  std::vector<CartesianPoint> waypoints;
};

/// Waypoints every `spacing` metres along the route, both endpoints included.
[[nodiscard]] IncentivisedRoute compile_incentivised_route(const RoadNetwork& net, std::string id, Route route,
                                                           double spacing);

enum class EventKind : std::uint8_t {
  Accepted,               // committed to an incentivised route
  Reverted,               // declined at a later epoch and resumed the original trip
  EnteredIncentivised,
  Checkpoint,             // detail: message_id
  CheckpointFailed,
  CompletedIncentivised,
  Arrived,
  ExternalJoined,
  ExternalLeft,
};

[[nodiscard]] std::string_view to_string(EventKind k);

struct EventRecord {
  std::int64_t step = 0;
  std::string agent_id;
  EventKind kind{};
  std::string detail;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct SeriesRow {
  std::int64_t step = 0;
  double price = 0.0;
  std::int64_t error = 0;
  std::int64_t agents_on = 0;
  std::int64_t active = 0;  // agents not yet Arrived

  friend bool operator==(const SeriesRow&, const SeriesRow&) = default;
};

struct SimState {
  std::int64_t step = 0;
  std::vector<Agent> agents;
  double price = 0.0;
  std::int64_t error = 0;
  std::int64_t agents_on = 0;
  std::int64_t last_epoch_step = 0;
  ControllerState controller;
  std::vector<EventRecord> events;
  std::vector<SeriesRow> series;
};

struct PostedCheckpoint {
  std::string agent_id;
  std::string message_id;
  std::int64_t step = 0;
};

/// What a step did, handed to the observer once the step commits.
struct StepReport {
  std::int64_t step = 0;
  bool epoch = false;
  bool price_changed = false;
  std::vector<PostedCheckpoint> checkpoints;
};

class Simulation;

/// Hooks run on the engine thread. before_step sees the state at the step
/// boundary and is the only place external mutations are applied.
class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void before_step(Simulation&) {}
  virtual void after_step(Simulation&, const StepReport&) {}
};

struct SimResult {
  std::vector<EventRecord> events;
  std::vector<SeriesRow> series;
  std::vector<CheckpointMessage> ledger;
  std::map<std::string, std::size_t> checkpoint_counts;
  std::size_t n_agents = 0;
  std::size_t pedestrian_edge_count = 0;
};

/// Result of feeding an external agent a new observed position.
struct ExternalMove {
  EdgeMatch snapped;
  bool on_incentivised_route = false;
  std::vector<PostedCheckpoint> checkpoints;
};

/// The main loop: spawning, initial decisions, pricing epochs every
/// price_interval steps, incentivised rerouting and waypoint checkpoints.
/// Single-threaded; deterministic for a given config.
class Simulation {
 public:
  /// Builds the network from the config and runs the initial decision pass.
  static Simulation initialize(const SimConfig& config, std::shared_ptr<MockTangle> ledger = nullptr);
  Simulation(const SimConfig& config, std::shared_ptr<const RoadNetwork> net,
             std::shared_ptr<MockTangle> ledger = nullptr);

  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;
  ~Simulation();

  /// Precondition: !finished().
  void step();
  /// Controller update and, when the price moved, the population re-decision.
  void repricing_epoch();

  [[nodiscard]] bool finished() const { return state_.step >= config_.n_steps; }
  [[nodiscard]] const SimState& state() const { return state_; }
  [[nodiscard]] const SimConfig& config() const { return config_; }
  [[nodiscard]] const RoadNetwork& network() const { return *net_; }
  [[nodiscard]] std::shared_ptr<const RoadNetwork> network_ptr() const { return net_; }
  [[nodiscard]] MockTangle& ledger() { return *ledger_; }
  [[nodiscard]] const MockTangle& ledger() const { return *ledger_; }
  [[nodiscard]] std::span<const IncentivisedRoute> incentivised_routes() const { return routes_; }
  [[nodiscard]] const std::string& ledger_index() const { return ledger_index_; }
  [[nodiscard]] const Agent* find_agent(std::string_view id) const;

  /// Recount of committed agents from statuses.
  [[nodiscard]] std::int64_t count_agents_on() const;

  void set_observer(StepObserver* observer) { observer_ = observer; }

  [[nodiscard]] SimResult result() const;
  /// Deterministic JSON rendering of the state (excluding logs).
  [[nodiscard]] std::string snapshot_json() const;

  // External (human) agents. Call only from the engine thread, typically
  // from StepObserver::before_step.
  /// Next free external id ("ext-0", "ext-1", ...).
  std::string reserve_external_id();
  void add_external_agent(const std::string& id, const EdgeMatch& at);
  ExternalMove move_external_agent(const std::string& id, CartesianPoint p);
  /// Commits the agent to a randomly chosen incentivised route; returns its index.
  std::size_t accept_external(const std::string& id);
  void decline_external(const std::string& id);
  void remove_external(const std::string& id);

 private:
  Agent& agent_ref(const std::string& id);
  void move_agent(Agent& a, StepReport& report);
  void commit(Agent& a, std::size_t route_index);
  bool revert(Agent& a);
  void post_crossed_waypoints(Agent& a, std::vector<PostedCheckpoint>* sink);
  void log(const Agent& a, EventKind kind, std::string detail = {});

  SimConfig config_;
  std::shared_ptr<const RoadNetwork> net_;
  std::shared_ptr<MockTangle> ledger_;
  std::unique_ptr<Router> router_;
  std::vector<IncentivisedRoute> routes_;
  std::string ledger_index_;
  RandomSource rng_;
  RandomSource external_rng_;
  SimState state_;
  std::unordered_map<std::string, std::size_t> agent_slot_;
  std::size_t next_external_ = 0;
  bool epoch_price_changed_ = false;
  StepObserver* observer_ = nullptr;
};

/// initialize + n_steps steps.
[[nodiscard]] SimResult run(const SimConfig& config, StepObserver* observer = nullptr);

/// `step,price,error,agents_on` with a header row.
[[nodiscard]] std::string series_csv(const std::vector<SeriesRow>& series);
[[nodiscard]] std::string events_csv(const std::vector<EventRecord>& events);

}  // namespace herd
