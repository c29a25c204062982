#include "herd/hil.hpp"

#include <fmt/core.h>
#include <json.hpp>

#include "herd/error.hpp"

namespace herd::hil {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

}  // namespace

Parsed parse_client_message(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error&) {
    return {std::nullopt, "parse"};
  }
  if (!doc.is_object()) return {std::nullopt, "parse"};
  auto type = doc.find("type");
  if (type == doc.end() || !type->is_string()) return {std::nullopt, "invalid"};
  const auto kind = type->get<std::string>();

  if (kind == "join") {
    Join m;
    if (auto n = doc.find("name"); n != doc.end()) {
      if (!n->is_string()) return {std::nullopt, "invalid"};
      m.name = n->get<std::string>();
    }
    return {ClientMessage{std::move(m)}, {}};
  }
  if (kind == "position") {
    auto lat = doc.find("lat");
    auto lon = doc.find("lon");
    if (lat == doc.end() || lon == doc.end() || !lat->is_number() || !lon->is_number()) return {std::nullopt, "invalid"};
    Position m{{lat->get<double>(), lon->get<double>()}, std::nullopt};
    if (!m.geo.valid()) return {std::nullopt, "invalid"};
    if (auto ts = doc.find("ts"); ts != doc.end()) {
      if (!ts->is_number_integer()) return {std::nullopt, "invalid"};
      m.ts = ts->get<std::int64_t>();
    }
    return {ClientMessage{m}, {}};
  }
  if (kind == "decision") {
    auto accept = doc.find("accept");
    auto epoch = doc.find("epoch_step");
    if (accept == doc.end() || !accept->is_boolean() || epoch == doc.end() || !epoch->is_number_integer()) {
      return {std::nullopt, "invalid"};
    }
    return {ClientMessage{Decision{accept->get<bool>(), epoch->get<std::int64_t>()}}, {}};
  }
  if (kind == "leave") return {ClientMessage{Leave{}}, {}};
  return {std::nullopt, "unknown-type"};
}

std::string joined_message(std::string_view agent_id, double price, std::int64_t step) {
  ordered_json j;
  j["type"] = "joined";
  j["agent_id"] = agent_id;
  j["price"] = price;
  j["step"] = step;
  return j.dump();
}

std::string price_message(double value, std::int64_t epoch_step) {
  ordered_json j;
  j["type"] = "price";
  j["value"] = value;
  j["epoch_step"] = epoch_step;
  return j.dump();
}

std::string route_message(std::string_view route_id, const std::vector<GeoPoint>& waypoints) {
  ordered_json j;
  j["type"] = "route";
  j["route_id"] = route_id;
  auto& list = j["waypoints"] = ordered_json::array();
  for (const auto& w : waypoints) {
    ordered_json p;
    p["lat"] = w.lat;
    p["lon"] = w.lon;
    list.push_back(std::move(p));
  }
  return j.dump();
}

std::string checkpoint_message(std::string_view message_id, std::int64_t step) {
  ordered_json j;
  j["type"] = "checkpoint";
  j["message_id"] = message_id;
  j["step"] = step;
  return j.dump();
}

std::string error_message(std::string_view reason) {
  ordered_json j;
  j["type"] = "error";
  j["reason"] = reason;
  return j.dump();
}

Coordinator::Coordinator(OutboundSink sink) : sink_(std::move(sink)) {}

void Coordinator::set_sink(OutboundSink sink) { sink_ = std::move(sink); }

std::string Coordinator::open_session() { return fmt::format("s-{}", next_session_++); }

void Coordinator::submit(const std::string& session_id, ClientMessage message) {
  std::scoped_lock lock(inbox_mutex_);
  inbox_.push_back({session_id, std::move(message)});
}

void Coordinator::close_session(const std::string& session_id) { submit(session_id, Leave{}); }

std::size_t Coordinator::queued() const {
  std::scoped_lock lock(inbox_mutex_);
  return inbox_.size();
}

void Coordinator::send(const Session& s, std::string line) { outbox_.emplace_back(s.session_id, std::move(line)); }

void Coordinator::before_step(Simulation& sim) {
  std::vector<Inbound> batch;
  {
    std::scoped_lock lock(inbox_mutex_);
    batch.swap(inbox_);
  }
  for (auto& in : batch) {
    auto [it, fresh] = sessions_.try_emplace(in.session_id);
    Session& s = it->second;
    if (fresh) s.session_id = in.session_id;
    std::visit([&](const auto& m) { apply(sim, s, m); }, in.message);
    ++s.applied;
  }
}

void Coordinator::after_step(Simulation& sim, const StepReport& report) {
  if (report.epoch) {
    const double price = sim.state().price;
    for (auto& [id, s] : sessions_) {
      if (s.state != SessionState::Joined && s.state != SessionState::Active) continue;
      s.pending_decision = PendingDecision{price, report.step};
      send(s, price_message(price, report.step));
    }
  }
  auto out = std::move(outbox_);
  outbox_.clear();
  if (!sink_) return;
  for (const auto& [session, line] : out) sink_(session, line);
}

void Coordinator::apply(Simulation& sim, Session& s, const Join& m) {
  if (s.state == SessionState::Closed) return send(s, error_message("closed"));
  if (s.state != SessionState::Connected) return send(s, error_message("already-joined"));
  s.name = m.name;
  s.agent_id = sim.reserve_external_id();
  s.state = SessionState::Joined;
  s.pending_decision = PendingDecision{sim.state().price, sim.state().last_epoch_step};
  send(s, joined_message(s.agent_id, sim.state().price, sim.state().step));
}

void Coordinator::apply(Simulation& sim, Session& s, const Position& m) {
  if (s.state == SessionState::Closed) return send(s, error_message("closed"));
  if (s.state == SessionState::Connected) return send(s, error_message("not-joined"));
  const auto& net = sim.network();
  const auto xy = geo_to_cartesian(net, m.geo);
  const auto match = nearest_edge(net, xy);
  if (match.distance > sim.config().off_map_distance) return send(s, error_message("off-map"));

  if (s.state == SessionState::Joined) {
    sim.add_external_agent(s.agent_id, match);
    s.state = SessionState::Active;
  } else {
    auto moved = sim.move_external_agent(s.agent_id, xy);
    for (const auto& c : moved.checkpoints) send(s, checkpoint_message(c.message_id, c.step));
  }
  s.last_position = m.geo;
  s.last_position_step = sim.state().step;
}

void Coordinator::apply(Simulation& sim, Session& s, const Decision& m) {
  if (s.state == SessionState::Closed) return send(s, error_message("closed"));
  if (s.state == SessionState::Connected) return send(s, error_message("not-joined"));
  if (s.state == SessionState::Joined) return send(s, error_message("not-placed"));
  if (!s.pending_decision || s.pending_decision->epoch_step != m.epoch_step) {
    const bool stale = m.epoch_step < sim.state().last_epoch_step ||
                       (s.pending_decision && m.epoch_step < s.pending_decision->epoch_step);
    return send(s, error_message(stale ? "expired" : "no-pending"));
  }
  s.pending_decision.reset();
  if (m.accept) {
    const auto index = sim.accept_external(s.agent_id);
    const auto& ir = sim.incentivised_routes()[index];
    std::vector<GeoPoint> waypoints;
    waypoints.reserve(ir.waypoints.size());
    for (const auto& w : ir.waypoints) waypoints.push_back(cartesian_to_geo(sim.network(), w));
    send(s, route_message(ir.id, waypoints));
  } else {
    sim.decline_external(s.agent_id);
  }
}

void Coordinator::apply(Simulation& sim, Session& s, const Leave&) {
  if (s.state == SessionState::Active) sim.remove_external(s.agent_id);
  s.state = SessionState::Closed;
  s.pending_decision.reset();
}

}  // namespace herd::hil
