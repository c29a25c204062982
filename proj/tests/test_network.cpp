#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "herd/error.hpp"
#include "herd/network.hpp"
#include "herd/random.hpp"
#include "oracles.hpp"

using namespace herd;

namespace {

const GeoPoint kOrigin{51.4974, -0.1776};

std::string two_node_json(const std::string& to = "b") {
  return R"({"geo_origin":{"lat":51.4974,"lon":-0.1776},
    "nodes":[{"id":"a","x":0,"y":0},{"id":"b","x":10,"y":0}],
    "edges":[{"id":"a-b","from":"a","to":")" +
         to + R"(","length":10,"pedestrian":true}]})";
}

}  // namespace

TEST(NetworkParse, MinimalFileHasOnePedestrianEdge) {
  const auto net = parse_network(two_node_json());
  EXPECT_EQ(net.node_count(), 2u);
  EXPECT_EQ(pedestrian_edges(net), std::vector<std::string>{"a-b"});
}

TEST(NetworkParse, MissingNodeIsCitedInError) {
  try {
    (void)parse_network(two_node_json("n99"));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("n99"), std::string::npos);
  }
}

TEST(NetworkParse, MalformedJsonIsParseError) { EXPECT_THROW((void)parse_network("{nodes:"), ParseError); }

TEST(NetworkParse, RejectsBadLengthsAndDuplicates) {
  const std::vector<Node> nodes{{"a", 0, 0}, {"b", 10, 0}};
  EXPECT_THROW(RoadNetwork(kOrigin, nodes, {{"e", "a", "b", 0.0, true}}), ValidationError);
  EXPECT_THROW(RoadNetwork(kOrigin, nodes, {{"e", "a", "b", 10.2, true}}), ValidationError);
  EXPECT_NO_THROW(RoadNetwork(kOrigin, nodes, {{"e", "a", "b", 10.005, true}}));
  EXPECT_THROW(RoadNetwork(kOrigin, nodes, {{"e", "a", "b", 10, true}, {"e", "b", "a", 10, true}}), ValidationError);
  EXPECT_THROW(RoadNetwork(kOrigin, {{"a", 0, 0}, {"a", 10, 0}}, {}), ValidationError);
}

TEST(NetworkGrid, Counts) {
  const auto g2 = generate_grid(2, 2, 100, kOrigin);
  EXPECT_EQ(g2.node_count(), 4u);
  EXPECT_EQ(g2.edge_count(), 8u);
  for (const auto& e : g2.edges()) EXPECT_DOUBLE_EQ(e.length, 100.0);

  const auto g4 = generate_grid(4, 4, 50, kOrigin);
  EXPECT_EQ(g4.node_count(), 16u);
  EXPECT_EQ(g4.edge_count(), 48u);

  EXPECT_THROW((void)generate_grid(1, 5, 10, kOrigin), DimensionError);
  EXPECT_THROW((void)generate_grid(3, 3, 0, kOrigin), DimensionError);
}

TEST(NetworkGrid, FileRoundTripIsFieldForField) {
  const auto grid = generate_grid(4, 4, 50, kOrigin);
  const auto path = std::filesystem::temp_directory_path() / "herd_grid_roundtrip.json";
  save_network(grid, path);
  const auto loaded = load_network(path);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded, grid);
  ASSERT_EQ(loaded.edges().size(), grid.edges().size());
  for (std::size_t i = 0; i < grid.edges().size(); ++i) EXPECT_EQ(loaded.edges()[i], grid.edges()[i]);
}

TEST(NetworkFilter, PedestrianEdges) {
  const auto all = generate_grid(3, 3, 10, kOrigin);
  auto ids = pedestrian_edges(all);
  std::vector<std::string> expected;
  for (const auto& e : all.edges()) expected.push_back(e.id);
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(ids, expected);
  EXPECT_EQ(pedestrian_edges(all), ids);

  std::vector<Node> nodes;
  for (int i = 0; i < 11; ++i) nodes.push_back({"v" + std::to_string(i), i * 10.0, 0});
  std::vector<Edge> edges;
  std::vector<std::string> allowed;
  for (int i = 0; i < 10; ++i) {
    const bool ped = (i % 3 == 1) || i == 9;
    edges.push_back({"e" + std::to_string(i), nodes[i].id, nodes[i + 1].id, 10, ped});
    if (ped) allowed.push_back(edges.back().id);
  }
  std::sort(allowed.begin(), allowed.end());
  const RoadNetwork mixed(kOrigin, nodes, edges);
  EXPECT_EQ(allowed.size(), 4u);
  EXPECT_EQ(pedestrian_edges(mixed), allowed);

  for (auto& e : edges) e.pedestrian = false;
  EXPECT_TRUE(pedestrian_edges(RoadNetwork(kOrigin, nodes, edges)).empty());
}

TEST(NetworkProjection, KnownOffsets) {
  const auto net = generate_grid(2, 2, 10, kOrigin);
  const auto o = geo_to_cartesian(net, kOrigin);
  EXPECT_EQ(o.x, 0.0);
  EXPECT_EQ(o.y, 0.0);

  const double r = 6371000.0, pi = std::acos(-1.0);
  const double per_degree = r * pi / 180.0;
  const auto north = geo_to_cartesian(net, {kOrigin.lat + 0.01, kOrigin.lon});
  EXPECT_NEAR(north.y, 1111.95, 0.01);
  EXPECT_NEAR(north.y, 0.01 * per_degree, 1e-6);
  EXPECT_NEAR(north.x, 0.0, 1e-9);

  const auto east = geo_to_cartesian(net, {kOrigin.lat, kOrigin.lon + 0.01});
  EXPECT_NEAR(east.x, 692.3, 0.1);
  EXPECT_NEAR(east.y, 0.0, 1e-9);
}

TEST(NetworkProjection, AffineAndInvertible) {
  const auto net = generate_grid(2, 2, 10, kOrigin);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  for (int i = 0; i < 200; ++i) {
    const double a = d(gen), b = d(gen);
    const auto pa = geo_to_cartesian(net, {kOrigin.lat + a, kOrigin.lon});
    const auto pb = geo_to_cartesian(net, {kOrigin.lat + b, kOrigin.lon});
    const auto pab = geo_to_cartesian(net, {kOrigin.lat + a + b, kOrigin.lon});
    EXPECT_NEAR(pab.y, pa.y + pb.y, 1e-6);
    const auto qa = geo_to_cartesian(net, {kOrigin.lat, kOrigin.lon + a});
    const auto qb = geo_to_cartesian(net, {kOrigin.lat, kOrigin.lon + b});
    const auto qab = geo_to_cartesian(net, {kOrigin.lat, kOrigin.lon + a + b});
    EXPECT_NEAR(qab.x, qa.x + qb.x, 1e-6);

    const GeoPoint g{kOrigin.lat + a, kOrigin.lon + b};
    const auto back = cartesian_to_geo(net, geo_to_cartesian(net, g));
    EXPECT_NEAR(back.lat, g.lat, 1e-12);
    EXPECT_NEAR(back.lon, g.lon, 1e-12);
  }
}

TEST(NetworkSnap, PointOnEdge) {
  const auto net = generate_grid(3, 3, 100, kOrigin);
  const auto e = net.edge_index("n0_0-n0_1");
  const auto p = net.point_at({e, 30.0});
  const auto m = nearest_edge(net, p);
  // The reverse edge n0_1-n0_0 is equally close; the smaller id wins.
  EXPECT_EQ(net.edge(m.edge).id, "n0_0-n0_1");
  EXPECT_NEAR(m.offset, 30.0, 1e-9);
  EXPECT_NEAR(m.distance, 0.0, 1e-12);
}

TEST(NetworkSnap, EquidistantParallelEdgesPickSmallerId) {
  const RoadNetwork net(kOrigin, {{"a", 0, 0}, {"b", 10, 0}, {"c", 0, 10}, {"d", 10, 10}},
                        {{"z-top", "c", "d", 10, true}, {"m-bottom", "a", "b", 10, true}});
  const auto m = nearest_edge(net, {5, 5});
  EXPECT_EQ(net.edge(m.edge).id, "m-bottom");
  EXPECT_NEAR(m.distance, 5.0, 1e-12);
}

TEST(NetworkSnap, MatchesExhaustiveScan) {
  const auto net = generate_grid(4, 4, 50, kOrigin);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> d(-40, 190);
  for (int i = 0; i < 1000; ++i) {
    const CartesianPoint p{d(gen), d(gen)};
    const auto m = nearest_edge(net, p);
    double best = 1e300;
    for (const auto& e : net.edges()) {
      const auto& a = net.node(*net.find_node(e.from));
      const auto& b = net.node(*net.find_node(e.to));
      best = std::min(best, oracle::point_segment_distance(p.x, p.y, a.x, a.y, b.x, b.y));
    }
    EXPECT_NEAR(m.distance, best, 1e-9);
    const auto at = net.point_at({m.edge, m.offset});
    EXPECT_NEAR(std::hypot(at.x - p.x, at.y - p.y), m.distance, 1e-9);
  }
}

TEST(NetworkSnap, NoPedestrianEdgesIsPrecondition) {
  const RoadNetwork net(kOrigin, {{"a", 0, 0}, {"b", 10, 0}}, {{"e", "a", "b", 10, false}});
  EXPECT_THROW((void)nearest_edge(net, {0, 0}), PreconditionError);
}
