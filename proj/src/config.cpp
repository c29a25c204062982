#include "herd/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "herd/error.hpp"

namespace herd {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& ex) {
    throw ValidationError(fmt::format("config field \"{}\": {}", key, ex.what()));
  }
}

GeoPoint read_geo(const json& j) {
  GeoPoint g;
  read(j, "lat", g.lat);
  read(j, "lon", g.lon);
  return g;
}

}  // namespace

SimConfig parse_config_document(const json& doc, const std::filesystem::path& base_dir);

SimConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw ParseError(fmt::format("config JSON: {}", ex.what()));
  }
  if (!doc.is_object()) throw ValidationError("config JSON: top level must be an object");
  try {
    return parse_config_document(doc, base_dir);
  } catch (const json::exception& ex) {
    throw ValidationError(fmt::format("config JSON: {}", ex.what()));
  }
}

SimConfig parse_config_document(const json& doc, const std::filesystem::path& base_dir) {
  SimConfig c;
  read(doc, "n_agents", c.n_agents);
  read(doc, "n_steps", c.n_steps);
  read(doc, "price_interval", c.price_interval);
  read(doc, "seed", c.seed);
  read(doc, "waypoint_spacing", c.waypoint_spacing);
  read(doc, "hil_enabled", c.hil_enabled);
  read(doc, "sticky_commitment", c.sticky_commitment);
  read(doc, "walking_speed", c.walking_speed);
  read(doc, "run_id", c.run_id);
  read(doc, "off_map_distance", c.off_map_distance);
  read(doc, "route_snap_distance", c.route_snap_distance);
  if (auto it = doc.find("ledger_index"); it != doc.end() && it->is_string()) c.ledger_index = it->get<std::string>();

  if (auto it = doc.find("network"); it != doc.end()) {
    if (it->is_string()) {
      c.network.path = it->get<std::string>();
    } else if (it->is_object()) {
      if (auto p = it->find("path"); p != it->end()) c.network.path = p->get<std::string>();
      if (auto g = it->find("grid"); g != it->end()) {
        GridSpec spec;
        read(*g, "rows", spec.rows);
        read(*g, "cols", spec.cols);
        read(*g, "spacing", spec.spacing);
        if (auto o = g->find("geo_origin"); o != g->end()) spec.geo_origin = read_geo(*o);
        c.network.grid = spec;
      }
    } else {
      throw ValidationError("config field \"network\" must be a path string or an object");
    }
  }
  if (c.network.path && c.network.path->is_relative() && !base_dir.empty()) {
    c.network.path = base_dir / *c.network.path;
  }

  if (auto it = doc.find("incentivised_routes"); it != doc.end()) {
    if (!it->is_array()) throw ValidationError("config field \"incentivised_routes\" must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& r = (*it)[i];
      IncentivisedRouteSpec spec;
      spec.id = fmt::format("ir-{}", i);
      if (r.is_array()) {
        spec.edges = r.get<std::vector<std::string>>();
      } else {
        read(r, "id", spec.id);
        read(r, "edges", spec.edges);
        if (auto s = r.find("start_offset"); s != r.end()) spec.start_offset = s->get<double>();
        if (auto e = r.find("end_offset"); e != r.end()) spec.end_offset = e->get<double>();
      }
      c.incentivised_routes.push_back(std::move(spec));
    }
  }

  if (auto it = doc.find("controller"); it != doc.end()) {
    read(*it, "alpha", c.controller.alpha);
    read(*it, "beta", c.controller.beta);
    read(*it, "kappa", c.controller.kappa);
    read(*it, "fixed_demand", c.controller.fixed_demand);
  }
  if (auto it = doc.find("decision_curve"); it != doc.end()) {
    read(*it, "p_max", c.decision_curve.p_max);
    read(*it, "pi_sat", c.decision_curve.pi_sat);
  }
  if (auto it = doc.find("experiment"); it != doc.end()) {
    read(*it, "runs", c.experiment.runs);
    read(*it, "cycles", c.experiment.cycles);
    read(*it, "agents_min", c.experiment.agents_min);
    read(*it, "agents_max", c.experiment.agents_max);
    read(*it, "steps", c.experiment.steps);
  }
  validate_config(c);
  return c;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open config file {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string config_to_json(const SimConfig& c) {
  json doc;
  doc["n_agents"] = c.n_agents;
  doc["n_steps"] = c.n_steps;
  doc["price_interval"] = c.price_interval;
  doc["seed"] = c.seed;
  json net = json::object();
  if (c.network.path) net["path"] = c.network.path->string();
  if (c.network.grid) {
    const auto& g = *c.network.grid;
    net["grid"] = {{"rows", g.rows},
                   {"cols", g.cols},
                   {"spacing", g.spacing},
                   {"geo_origin", {{"lat", g.geo_origin.lat}, {"lon", g.geo_origin.lon}}}};
  }
  doc["network"] = net;
  auto& routes = doc["incentivised_routes"] = json::array();
  for (const auto& r : c.incentivised_routes) {
    json j = {{"id", r.id}, {"edges", r.edges}};
    if (r.start_offset) j["start_offset"] = *r.start_offset;
    if (r.end_offset) j["end_offset"] = *r.end_offset;
    routes.push_back(std::move(j));
  }
  doc["controller"] = {{"alpha", c.controller.alpha},
                       {"beta", c.controller.beta},
                       {"kappa", c.controller.kappa},
                       {"fixed_demand", c.controller.fixed_demand}};
  doc["decision_curve"] = {{"p_max", c.decision_curve.p_max}, {"pi_sat", c.decision_curve.pi_sat}};
  doc["waypoint_spacing"] = c.waypoint_spacing;
  doc["hil_enabled"] = c.hil_enabled;
  doc["sticky_commitment"] = c.sticky_commitment;
  doc["walking_speed"] = c.walking_speed;
  doc["run_id"] = c.run_id;
  if (c.ledger_index) doc["ledger_index"] = *c.ledger_index;
  doc["off_map_distance"] = c.off_map_distance;
  doc["route_snap_distance"] = c.route_snap_distance;
  doc["experiment"] = {{"runs", c.experiment.runs},
                       {"cycles", c.experiment.cycles},
                       {"agents_min", c.experiment.agents_min},
                       {"agents_max", c.experiment.agents_max},
                       {"steps", c.experiment.steps}};
  return doc.dump(2);
}

void validate_config(const SimConfig& c) {
  if (c.n_steps < 0) throw ValidationError(fmt::format("n_steps must be >= 0, got {}", c.n_steps));
  if (c.price_interval < 1) throw ValidationError(fmt::format("price_interval must be >= 1, got {}", c.price_interval));
  if (!(c.walking_speed > 0.0)) throw ValidationError("walking_speed must be positive");
  if (!(c.waypoint_spacing > 0.0)) throw ValidationError("waypoint_spacing must be positive");
  // One waypoint per step at most, so checkpoint steps strictly increase.
  if (c.waypoint_spacing <= c.walking_speed) {
    throw ValidationError(fmt::format("waypoint_spacing {} must exceed one step of travel ({} m)", c.waypoint_spacing,
                                      c.walking_speed));
  }
  if (!(c.off_map_distance > 0.0)) throw ValidationError("off_map_distance must be positive");
  if (!(c.route_snap_distance >= 0.0)) throw ValidationError("route_snap_distance must be >= 0");
  if (c.network.path && c.network.grid) throw ValidationError("network: give either a path or grid parameters, not both");
  if (c.experiment.agents_min > c.experiment.agents_max) {
    throw ValidationError("experiment.agents_min exceeds experiment.agents_max");
  }
  c.controller.validate();
  c.decision_curve.validate();
}

std::shared_ptr<const RoadNetwork> build_network(const SimConfig& config) {
  if (config.network.path) return std::make_shared<const RoadNetwork>(load_network(*config.network.path));
  const GridSpec g = config.network.grid.value_or(GridSpec{});
  return std::make_shared<const RoadNetwork>(generate_grid(g.rows, g.cols, g.spacing, g.geo_origin));
}

}  // namespace herd
