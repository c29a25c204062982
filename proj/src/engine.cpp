#include "herd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>
#include <json.hpp>

#include "herd/error.hpp"

namespace herd {

namespace {

constexpr double kStepSeconds = 1.0;
constexpr double kArcEpsilon = 1e-9;
// Route transitions possible within one step (approach -> route -> return).
constexpr int kMaxLegsPerStep = 4;
constexpr std::uint64_t kExternalStream = 0x4849'4c00;  // "HIL"

Route point_route(EdgePosition at) { return Route{{at.edge}, at.offset, at.offset, 0.0}; }

}  // namespace

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Accepted: return "accepted";
    case EventKind::Reverted: return "reverted";
    case EventKind::EnteredIncentivised: return "entered_incentivised";
    case EventKind::Checkpoint: return "checkpoint";
    case EventKind::CheckpointFailed: return "checkpoint_failed";
    case EventKind::CompletedIncentivised: return "completed_incentivised";
    case EventKind::Arrived: return "arrived";
    case EventKind::ExternalJoined: return "external_joined";
    case EventKind::ExternalLeft: return "external_left";
  }
  return "?";
}

IncentivisedRoute compile_incentivised_route(const RoadNetwork& net, std::string id, Route route, double spacing) {
  validate_route(net, route);
  IncentivisedRoute ir{std::move(id), std::move(route), {}, {}};
  for (double arc = 0.0; arc < ir.route.total_length - kArcEpsilon; arc += spacing) ir.waypoint_arcs.push_back(arc);
  ir.waypoint_arcs.push_back(ir.route.total_length);
  for (double arc : ir.waypoint_arcs) ir.waypoints.push_back(net.point_at(position_along(net, ir.route, arc)));
  return ir;
}

Simulation Simulation::initialize(const SimConfig& config, std::shared_ptr<MockTangle> ledger) {
  validate_config(config);
  return Simulation(config, build_network(config), std::move(ledger));
}

Simulation::Simulation(const SimConfig& config, std::shared_ptr<const RoadNetwork> net,
                       std::shared_ptr<MockTangle> ledger)
    : config_(config),
      net_(std::move(net)),
      ledger_(ledger ? std::move(ledger) : std::make_shared<MockTangle>()),
      router_(std::make_unique<Router>(*net_)),
      ledger_index_(config.effective_ledger_index()),
      rng_(config.seed),
      external_rng_(mix_seed(config.seed, kExternalStream)) {
  validate_config(config_);
  if (net_->pedestrian_edge_indices().empty()) throw ValidationError("network has no pedestrian-allowed edges");
  if (config_.incentivised_routes.empty()) throw ValidationError("config lists no incentivised routes");
  for (const auto& spec : config_.incentivised_routes) {
    if (spec.edges.empty()) throw ValidationError(fmt::format("incentivised route \"{}\" has no edges", spec.id));
    double end = spec.end_offset.value_or(-1.0);
    if (!spec.end_offset) {
      auto last = net_->find_edge(spec.edges.back());
      if (!last) throw ValidationError(fmt::format("incentivised route \"{}\" references missing edge \"{}\"", spec.id,
                                                   spec.edges.back()));
      end = net_->length(*last);
    }
    Route r;
    try {
      r = make_route(*net_, spec.edges, spec.start_offset.value_or(0.0), end);
    } catch (const ValidationError& ex) {
      throw ValidationError(fmt::format("incentivised route \"{}\": {}", spec.id, ex.what()));
    }
    routes_.push_back(compile_incentivised_route(*net_, spec.id, std::move(r), config_.waypoint_spacing));
  }

  ledger_->open_session(ledger_index_);

  state_.controller = config_.controller;
  state_.agents = spawn_agents(*router_, config_.n_agents, rng_);
  for (auto& a : state_.agents) a.speed = config_.walking_speed;
  for (std::size_t i = 0; i < state_.agents.size(); ++i) agent_slot_.emplace(state_.agents[i].id, i);

  // Initial price: one controller update from zero histories with nobody on.
  state_.error = compute_error(state_.controller, 0);
  const auto first = update_price(state_.controller, state_.error);
  state_.price = first.price;
  state_.controller = first.state;

  for (auto& a : state_.agents) {
    if (decide(state_.price, config_.decision_curve, rng_)) {
      commit(a, static_cast<std::size_t>(rng_.below(routes_.size())));
    }
  }
  state_.agents_on = count_agents_on();
}

Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;
Simulation::~Simulation() = default;

std::int64_t Simulation::count_agents_on() const {
  return std::count_if(state_.agents.begin(), state_.agents.end(), [](const Agent& a) { return committed(a.status); });
}

const Agent* Simulation::find_agent(std::string_view id) const {
  auto it = agent_slot_.find(std::string(id));
  return it == agent_slot_.end() ? nullptr : &state_.agents[it->second];
}

Agent& Simulation::agent_ref(const std::string& id) {
  auto it = agent_slot_.find(id);
  if (it == agent_slot_.end()) throw NotFound(fmt::format("unknown agent {}", id));
  return state_.agents[it->second];
}

void Simulation::log(const Agent& a, EventKind kind, std::string detail) {
  state_.events.push_back({state_.step, a.id, kind, std::move(detail)});
}

void Simulation::commit(Agent& a, std::size_t route_index) {
  const auto& ir = routes_[route_index];
  if (!a.is_external) {
    Route approach;
    try {
      approach = router_->route(a.position(), ir.route.start());
    } catch (const UnreachableError&) {
      return;  // cannot get there from here; stays on its current trip
    }
    a.follow(std::move(approach));
  }
  a.status = AgentStatus::ToIncentivised;
  a.incentivised_route = route_index;
  log(a, EventKind::Accepted, ir.id);
}

bool Simulation::revert(Agent& a) {
  if (!a.is_external) {
    Route home;
    try {
      home = router_->route(a.position(), a.destination);
    } catch (const UnreachableError&) {
      return false;
    }
    a.follow(std::move(home));
  }
  a.status = AgentStatus::Normal;
  a.incentivised_route.reset();
  log(a, EventKind::Reverted);
  return true;
}

void Simulation::post_crossed_waypoints(Agent& a, std::vector<PostedCheckpoint>* sink) {
  const auto& ir = routes_[*a.incentivised_route];
  while (a.next_waypoint < ir.waypoint_arcs.size() &&
         a.route_progress >= ir.waypoint_arcs[a.next_waypoint] - kArcEpsilon) {
    const auto& xy = ir.waypoints[a.next_waypoint];
    ++a.next_waypoint;
    try {
      auto id = ledger_->post_checkpoint(ledger_index_, a.id, xy, cartesian_to_geo(*net_, xy), state_.step);
      ++a.checkpoints_passed;
      if (sink) sink->push_back({a.id, id, state_.step});
      log(a, EventKind::Checkpoint, std::move(id));
    } catch (const LedgerUnavailable&) {
      log(a, EventKind::CheckpointFailed);
    }
  }
}

void Simulation::move_agent(Agent& a, StepReport& report) {
  double budget = a.speed * kStepSeconds;
  for (int leg = 0; leg < kMaxLegsPerStep; ++leg) {
    const auto moved = walk(a, *net_, budget);
    if (moved.route_completed && a.status == AgentStatus::OnIncentivised) a.route_progress = a.route.total_length;
    if (a.status == AgentStatus::OnIncentivised) post_crossed_waypoints(a, &report.checkpoints);
    if (!moved.route_completed) return;
    budget = moved.leftover_m;

    switch (a.status) {
      case AgentStatus::Arrived:
        log(a, EventKind::Arrived);
        return;
      case AgentStatus::ToIncentivised: {
        a.status = AgentStatus::OnIncentivised;
        a.follow(routes_[*a.incentivised_route].route);
        log(a, EventKind::EnteredIncentivised, routes_[*a.incentivised_route].id);
        post_crossed_waypoints(a, &report.checkpoints);
        break;
      }
      case AgentStatus::OnIncentivised: {
        log(a, EventKind::CompletedIncentivised, routes_[*a.incentivised_route].id);
        a.status = AgentStatus::Returning;
        a.incentivised_route.reset();
        Route home;
        try {
          home = router_->route(a.position(), a.destination);
        } catch (const UnreachableError&) {
          home = point_route(a.position());
        }
        a.follow(std::move(home));
        break;
      }
      default:
        return;
    }
    if (budget <= 0.0) return;
  }
}

void Simulation::repricing_epoch() {
  state_.agents_on = count_agents_on();
  const auto e = compute_error(state_.controller, state_.agents_on);
  const auto upd = update_price(state_.controller, e);
  epoch_price_changed_ = upd.price != state_.price;
  state_.controller = upd.state;
  state_.price = upd.price;
  state_.error = e;
  state_.last_epoch_step = state_.step;

  if (epoch_price_changed_) {
    for (auto& a : state_.agents) {
      if (a.is_external) continue;
      const bool eligible = a.status == AgentStatus::Normal || committed(a.status);
      if (!eligible) continue;
      const bool yes = decide(state_.price, config_.decision_curve, rng_);
      if (a.status == AgentStatus::Normal) {
        if (yes) commit(a, static_cast<std::size_t>(rng_.below(routes_.size())));
      } else if (!yes && !config_.sticky_commitment) {
        revert(a);
      }
    }
  }
  state_.agents_on = count_agents_on();
}

void Simulation::step() {
  if (finished()) throw PreconditionError(fmt::format("step: run already completed {} steps", config_.n_steps));
  if (observer_) observer_->before_step(*this);

  StepReport report;
  report.step = state_.step;
  if (state_.step > 0 && state_.step % config_.price_interval == 0) {
    repricing_epoch();
    report.epoch = true;
    report.price_changed = epoch_price_changed_;
  }
  for (auto& a : state_.agents) {
    if (a.is_external || a.status == AgentStatus::Arrived) continue;
    move_agent(a, report);
  }
  state_.agents_on = count_agents_on();
  const auto active = std::count_if(state_.agents.begin(), state_.agents.end(),
                                    [](const Agent& a) { return a.status != AgentStatus::Arrived; });
  state_.series.push_back({state_.step, state_.price, state_.error, state_.agents_on, active});
  ++state_.step;

  if (observer_) observer_->after_step(*this, report);
}

std::string Simulation::reserve_external_id() { return fmt::format("ext-{}", next_external_++); }

void Simulation::add_external_agent(const std::string& id, const EdgeMatch& at) {
  if (agent_slot_.contains(id)) throw PreconditionError(fmt::format("agent {} already exists", id));
  Agent a;
  a.id = id;
  a.is_external = true;
  a.origin = a.destination = {at.edge, at.offset};
  a.follow(point_route(a.origin));
  a.speed = 0.0;
  agent_slot_.emplace(a.id, state_.agents.size());
  state_.agents.push_back(std::move(a));
  log(state_.agents.back(), EventKind::ExternalJoined);
  state_.agents_on = count_agents_on();
}

ExternalMove Simulation::move_external_agent(const std::string& id, CartesianPoint p) {
  Agent& a = agent_ref(id);
  if (a.status == AgentStatus::Arrived) throw PreconditionError(fmt::format("agent {} has left", id));
  ExternalMove out;

  if (a.incentivised_route) {
    const auto& ir = routes_[*a.incentivised_route];
    const auto& r = ir.route;
    // Map-match onto the assigned route; among equally close candidates
    // prefer the first one not behind the agent's progress.
    double best_dist = std::numeric_limits<double>::infinity();
    double best_arc = 0.0;
    std::size_t best_index = 0;
    double best_offset = 0.0;
    const double progress = a.status == AgentStatus::OnIncentivised ? a.route_progress : 0.0;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < r.edges.size(); ++i) {
      const double begin = i == 0 ? r.start_offset : 0.0;
      const double end = i + 1 == r.edges.size() ? r.end_offset : net_->length(r.edges[i]);
      auto m = project_onto_edge(*net_, r.edges[i], p);
      const double offset = std::clamp(m.offset, begin, end);
      const auto foot = net_->point_at({r.edges[i], offset});
      const double dist = std::hypot(p.x - foot.x, p.y - foot.y);
      const double arc = cumulative + (offset - begin);
      const bool closer = dist < best_dist - kArcEpsilon;
      const bool tie_forward = std::abs(dist - best_dist) <= kArcEpsilon && best_arc < progress - kArcEpsilon &&
                               arc >= progress - kArcEpsilon;
      if (closer || tie_forward) {
        best_dist = dist;
        best_arc = arc;
        best_index = i;
        best_offset = offset;
      }
      cumulative += end - begin;
    }

    if (best_dist <= config_.route_snap_distance) {
      if (a.status == AgentStatus::ToIncentivised) {
        a.status = AgentStatus::OnIncentivised;
        a.follow(r);
        log(a, EventKind::EnteredIncentivised, ir.id);
      }
      a.route_index = best_index;
      a.offset = best_offset;
      if (best_arc > a.route_progress) {
        a.distance_walked += best_arc - a.route_progress;
        a.route_progress = best_arc;
      }
      if (a.route_progress >= r.total_length - kArcEpsilon) a.route_progress = r.total_length;
      post_crossed_waypoints(a, &out.checkpoints);
      out.snapped = {r.edges[best_index], best_offset, best_dist};
      out.on_incentivised_route = true;
      if (a.next_waypoint >= ir.waypoint_arcs.size()) {
        log(a, EventKind::CompletedIncentivised, ir.id);
        a.status = AgentStatus::Returning;
        a.incentivised_route.reset();
        a.follow(point_route({r.edges[best_index], best_offset}));
      }
      return out;
    }
  }

  out.snapped = nearest_edge(*net_, p);
  if (a.status != AgentStatus::OnIncentivised) a.follow(point_route({out.snapped.edge, out.snapped.offset}));
  return out;
}

std::size_t Simulation::accept_external(const std::string& id) {
  Agent& a = agent_ref(id);
  if (a.status == AgentStatus::Arrived) throw PreconditionError(fmt::format("agent {} has left", id));
  if (committed(a.status)) return *a.incentivised_route;
  commit(a, static_cast<std::size_t>(external_rng_.below(routes_.size())));
  state_.agents_on = count_agents_on();
  return *a.incentivised_route;
}

void Simulation::decline_external(const std::string& id) {
  Agent& a = agent_ref(id);
  if (committed(a.status)) {
    const auto here = a.position();
    revert(a);
    a.follow(point_route(here));
  }
  state_.agents_on = count_agents_on();
}

void Simulation::remove_external(const std::string& id) {
  Agent& a = agent_ref(id);
  if (a.status == AgentStatus::Arrived) return;
  a.status = AgentStatus::Arrived;
  a.incentivised_route.reset();
  log(a, EventKind::ExternalLeft);
  state_.agents_on = count_agents_on();
}

SimResult Simulation::result() const {
  SimResult r;
  r.events = state_.events;
  r.series = state_.series;
  r.ledger = ledger_->query_by_index(ledger_index_);
  for (const auto& a : state_.agents) r.checkpoint_counts.emplace(a.id, a.checkpoints_passed);
  r.n_agents = config_.n_agents;
  r.pedestrian_edge_count = net_->pedestrian_edge_indices().size();
  return r;
}

std::string Simulation::snapshot_json() const {
  using nlohmann::json;
  json doc;
  doc["step"] = state_.step;
  doc["price"] = state_.price;
  doc["error"] = state_.error;
  doc["agents_on"] = state_.agents_on;
  doc["controller"] = {{"e_history", state_.controller.e_history}, {"pi_history", state_.controller.pi_history}};
  auto& agents = doc["agents"] = json::array();
  for (const auto& a : state_.agents) {
    json j;
    j["id"] = a.id;
    j["status"] = to_string(a.status);
    j["edge"] = net_->edge(a.position().edge).id;
    j["offset"] = a.offset;
    j["route"] = edge_ids(*net_, a.route);
    j["route_offsets"] = {a.route.start_offset, a.route.end_offset};
    j["destination"] = {net_->edge(a.destination.edge).id, a.destination.offset};
    j["incentivised_route"] = a.incentivised_route ? json(routes_[*a.incentivised_route].id) : json(nullptr);
    j["checkpoints"] = a.checkpoints_passed;
    j["walked"] = a.distance_walked;
    agents.push_back(std::move(j));
  }
  return doc.dump();
}

SimResult run(const SimConfig& config, StepObserver* observer) {
  auto sim = Simulation::initialize(config);
  sim.set_observer(observer);
  while (!sim.finished()) sim.step();
  return sim.result();
}

std::string series_csv(const std::vector<SeriesRow>& series) {
  std::string out = "step,price,error,agents_on\n";
  for (const auto& r : series) out += fmt::format("{},{},{},{}\n", r.step, r.price, r.error, r.agents_on);
  return out;
}

std::string events_csv(const std::vector<EventRecord>& events) {
  std::string out = "step,agent_id,event,detail\n";
  for (const auto& e : events) out += fmt::format("{},{},{},{}\n", e.step, e.agent_id, to_string(e.kind), e.detail);
  return out;
}

}  // namespace herd
