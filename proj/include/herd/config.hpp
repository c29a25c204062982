#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "herd/agents.hpp"
#include "herd/network.hpp"
#include "herd/pricing.hpp"

namespace herd {

struct GridSpec {
  int rows = 6;
  int cols = 6;
  double spacing = 50.0;
  GeoPoint geo_origin{51.4974, -0.1776};
};

/// Either a network JSON file or generated grid parameters.
struct NetworkSource {
  std::optional<std::filesystem::path> path;
  std::optional<GridSpec> grid;
};

struct IncentivisedRouteSpec {
  std::string id;  // defaults to "ir-<position>"
  std::vector<std::string> edges;
  std::optional<double> start_offset;  // default 0
  std::optional<double> end_offset;    // default: full length of the last edge
};

/// Parameters for the two batch experiments.
struct ExperimentSettings {
  std::size_t runs = 10;        // controller experiment repetitions
  std::size_t cycles = 125;     // metrics experiment cycles
  std::size_t agents_min = 30;  // metrics experiment population range
  std::size_t agents_max = 50;
  std::int64_t steps = 1000;    // metrics experiment steps per cycle
};

struct SimConfig {
  std::size_t n_agents = 0;
  std::int64_t n_steps = 0;
  std::int64_t price_interval = 10;
  std::uint64_t seed = 0;
  NetworkSource network;
  std::vector<IncentivisedRouteSpec> incentivised_routes;
  ControllerState controller;
  DecisionCurve decision_curve;
  double waypoint_spacing = 50.0;
  bool hil_enabled = false;
  bool sticky_commitment = false;
  double walking_speed = kWalkingSpeed;
  std::string run_id = "run";
  std::optional<std::string> ledger_index;  // default "herd-routes/<run_id>"
  double off_map_distance = 250.0;          // metres, HIL snapping limit
  double route_snap_distance = 15.0;        // metres, HIL map-matching onto an assigned route
  ExperimentSettings experiment;

  [[nodiscard]] std::string effective_ledger_index() const {
    return ledger_index ? *ledger_index : "herd-routes/" + run_id;
  }
};

/// Parses a config document. Relative network paths resolve against `base_dir`.
/// Throws ParseError or ValidationError.
[[nodiscard]] SimConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
[[nodiscard]] SimConfig load_config(const std::filesystem::path& path);
[[nodiscard]] std::string config_to_json(const SimConfig& config);

/// Scalar checks that do not need the network.
void validate_config(const SimConfig& config);

[[nodiscard]] std::shared_ptr<const RoadNetwork> build_network(const SimConfig& config);

}  // namespace herd
