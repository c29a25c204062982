#pragma once

#include <string>
#include <vector>

#include "herd/config.hpp"

namespace support {

inline std::vector<std::string> row_edges(int row, int c0, int c1) {
  std::vector<std::string> ids;
  for (int c = c0; c < c1; ++c) ids.push_back("n" + std::to_string(row) + "_" + std::to_string(c) + "-n" +
                                              std::to_string(row) + "_" + std::to_string(c + 1));
  return ids;
}

inline std::vector<std::string> col_edges(int col, int r0, int r1) {
  std::vector<std::string> ids;
  for (int r = r0; r < r1; ++r) ids.push_back("n" + std::to_string(r) + "_" + std::to_string(col) + "-n" +
                                              std::to_string(r + 1) + "_" + std::to_string(col));
  return ids;
}

/// Square grid with one incentivised route along the middle row and one up
/// the middle column.
inline herd::SimConfig grid_config(int size, double spacing, std::size_t agents, std::int64_t steps,
                                   std::uint64_t seed) {
  herd::SimConfig c;
  c.n_agents = agents;
  c.n_steps = steps;
  c.seed = seed;
  c.network.grid = herd::GridSpec{size, size, spacing, {51.4974, -0.1776}};
  const int mid = size / 2;
  c.incentivised_routes.push_back({"ir-row", row_edges(mid, 0, size - 1), std::nullopt, std::nullopt});
  c.incentivised_routes.push_back({"ir-col", col_edges(mid, 0, size - 1), std::nullopt, std::nullopt});
  return c;
}

}  // namespace support
