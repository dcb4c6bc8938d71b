#include "timberflow/road_graph.hpp"

#include <random>

#include "doctest.h"
#include "road_oracles.hpp"
#include "timberflow/error.hpp"

using namespace timberflow;
using timberflow::testing::floyd_warshall;
using timberflow::testing::random_road_graph;

namespace {

const char* kTriangle =
    "node_id,x,y\n"
    "1,0,0\n"
    "2,3,0\n"
    "3,0,4\n"
    "edge,node_a,node_b,length_m\n"
    "a,1,2,3\n"
    "b,1,3,4\n"
    "c,2,3,5\n";

}  // namespace

TEST_CASE("load: triangle") {
  const RoadGraph g = parse_road_graph(kTriangle, "tri.csv");
  CHECK(g.node_count() == 3);
  CHECK(g.edge_count() == 3);
  CHECK(g.edges()[2].length_m() == 5.0);
}

TEST_CASE("load: missing length falls back to straight-line distance") {
  const RoadGraph g = parse_road_graph(
      "node_id,x,y\n1,0,0\n2,3000,0\nedge,node_a,node_b,length_m,resolution\ne,1,2,,fine\n", "fallback.csv");
  CHECK(g.edges()[0].length_mm == 3'000'000);
}

TEST_CASE("load: lon/lat input is projected about the centroid") {
  const RoadGraph g =
      parse_road_graph("crs,lonlat\nnode_id,x,y\n1,76.7,31.3\n2,76.7,31.31\nedge,node_a,node_b\ne,1,2\n", "ll.csv");
  CHECK(g.projection.geographic);
  CHECK(g.edges()[0].length_m() == doctest::Approx(1111.95).epsilon(1e-4));
  CHECK(g.position(0).y == doctest::Approx(-555.97).epsilon(1e-4));
}

TEST_CASE("load: errors name the offending row") {
  auto message = [](const std::string& text) {
    try {
      parse_road_graph(text, "bad.csv");
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("node_id,x,y\n1,0,0\n2,x,0\n").find("bad.csv:3") != std::string::npos);
  CHECK(message("node_id,x,y\n1,0,0\n2,1,0\nedge,node_a,node_b,length_m\ne,1,2,-4\n").find("bad.csv:5") !=
        std::string::npos);
  CHECK(message("node_id,x,y\n1,0,0\n2,1,0\nedge,node_a,node_b\ne,1,9\n").find("unknown node 9") !=
        std::string::npos);
  CHECK(message("node_id,x,y\n1,0,0\n2,1,0\nedge,node_a,node_b\ne,1,2\nf,2,1\n").find("duplicate") !=
        std::string::npos);
  CHECK(message("node_id,x,y\n1,0,0\n1,1,0\n").find("duplicate node") != std::string::npos);
  CHECK(message("node_id,x,y\n1,0,0\n2,0,0\nedge,node_a,node_b\ne,1,2\n").find("non-positive") !=
        std::string::npos);
}

TEST_CASE("merge: coarse node within tolerance is unified with the fine node") {
  const RoadGraph fine = parse_road_graph(
      "node_id,x,y\n1,0,0\n2,1000,0\n3,2000,0\nedge,node_a,node_b\na,1,2\nb,2,3\n", "fine.csv");
  // Coarse node 10 sits 100 m from fine node 3; 11 and 12 lead away.
  const RoadGraph coarse = parse_road_graph(
      "node_id,x,y\n10,2100,0\n11,20000,0\n12,40000,0\n"
      "edge,node_a,node_b,resolution\na,10,11,coarse\nb,11,12,coarse\n",
      "coarse.csv");
  const RoadGraph merged = merge_road_graphs(fine, coarse);
  CHECK(merged.node_count() == fine.node_count() + coarse.node_count() - 1);
  CHECK(merged.edge_count() == 4);
  CHECK(merged.index_of(4).has_value());  // coarse 11 renumbered after the largest fine id
  CHECK(merged.index_of(5).has_value());

  // A trader at the far coarse end is unreachable without the merge.
  const std::vector<Site> villages{{"v1", {0, 0}}};
  const std::vector<Site> traders{{"t1", {40000, 0}}};
  const ODResult apart = od_cost_matrix(villages, traders, merge_road_graphs(fine, coarse, 0.0));
  CHECK(apart.matrix.at(0, 0) == ODMatrix::kUnreachable);
  CHECK(apart.unreachable.size() == 1);
  const ODResult joined = od_cost_matrix(villages, traders, merged);
  CHECK(joined.matrix.at(0, 0) == 2000 + 17900 + 20000);
  CHECK(joined.unreachable.empty());
}

TEST_CASE("snap: coincident point, ties and linear-scan oracle") {
  RoadGraph g;
  g.add_node(12, {5, 0});
  g.add_node(7, {-5, 0});
  g.add_node(3, {0, 50});
  CHECK(snap_site({"a", {5, 0}}, g).node == 0);
  CHECK(snap_site({"a", {5, 0}}, g).snap_offset_m == 0.0);
  CHECK(g.node_id(snap_site({"b", {0, 0}}, g).node) == 7);

  std::mt19937_64 rng(3);
  const RoadGraph big = random_road_graph(rng, 400, 20000.0, 0.0);
  const NodeLocator locator(big);
  std::uniform_real_distribution<double> coord(-3000.0, 23000.0);
  for (int i = 0; i < 2000; ++i) {
    const Point p{coord(rng), coord(rng)};
    int best = 0;
    for (int n = 1; n < big.node_count(); ++n) {
      const double dn = distance(p, big.position(n)), db = distance(p, big.position(best));
      if (dn < db || (dn == db && big.node_id(n) < big.node_id(best))) best = n;
    }
    CHECK(locator.nearest(p) == best);
  }
  CHECK_THROWS_AS(snap_site({"x", {0, 0}}, RoadGraph{}), InputError);
}

TEST_CASE("shortest paths: triangle, singleton and disconnected graphs") {
  const RoadGraph g = parse_road_graph(kTriangle, "tri.csv");
  const auto d = shortest_paths_from(*g.index_of(1), g);
  CHECK(d[*g.index_of(2)] == 3000);
  CHECK(d[*g.index_of(3)] == 4000);
  CHECK(d == floyd_warshall(g)[*g.index_of(1)]);

  RoadGraph single;
  single.add_node(1, {0, 0});
  CHECK(shortest_paths_from(0, single) == std::vector<std::int64_t>{0});

  RoadGraph split;
  split.add_node(1, {0, 0});
  split.add_node(2, {1, 0});
  split.add_node(3, {9, 9});
  split.add_edge(1, 2, std::nullopt);
  CHECK(shortest_paths_from(0, split)[2] == kUnreachableMm);
  CHECK_THROWS_AS(shortest_paths_from(5, split), InputError);
}

TEST_CASE("shortest paths: Dijkstra matches Floyd-Warshall on random graphs up to 50 nodes") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    const RoadGraph g = random_road_graph(rng, n, 5000.0, 0.3);
    const auto all = floyd_warshall(g);
    for (int s = 0; s < g.node_count(); ++s) CHECK(shortest_paths_from(s, g) == all[s]);
  }
}

TEST_CASE("od matrix") {
  const RoadGraph g = parse_road_graph(kTriangle, "tri.csv");
  const auto all = floyd_warshall(g);

  SUBCASE("same snap node gives zero") {
    const ODResult r = od_cost_matrix({{"v", {0.1, 0.1}}}, {{"t", {0, 0}}}, g);
    CHECK(r.matrix.at(0, 0) == 0);
  }
  SUBCASE("2x2 matches Floyd-Warshall") {
    const std::vector<Site> villages{{"v1", {0, 0}}, {"v2", {3, 0}}};
    const std::vector<Site> traders{{"t1", {0, 4}}, {"t2", {3, 0.2}}};
    const ODResult r = od_cost_matrix(villages, traders, g, 2);
    for (std::size_t o = 0; o < 2; ++o) {
      for (std::size_t t = 0; t < 2; ++t) {
        CHECK(r.matrix.at(o, t) * 1000 == all[r.origin_snaps[o].node][r.destination_snaps[t].node]);
      }
    }
    CHECK(r.matrix.at(0, 0) == 4);
    CHECK(r.matrix.at(1, 0) == 5);
    CHECK(r.destination_snaps[1].snap_offset_m == doctest::Approx(0.2));
    const ODResult with_offsets = od_cost_matrix(villages, traders, g, 1, true);
    CHECK(with_offsets.matrix.at(0, 1) == 3);  // 3 m road + 0.2 m access, rounded
  }
  SUBCASE("row and column order do not change entries") {
    std::mt19937_64 rng(8);
    const RoadGraph big = random_road_graph(rng, 200, 10000.0, 0.2);
    std::vector<Site> villages, traders;
    std::uniform_real_distribution<double> c(0, 10000);
    for (int i = 0; i < 12; ++i) villages.push_back({"v" + std::to_string(i), {c(rng), c(rng)}});
    for (int i = 0; i < 7; ++i) traders.push_back({"t" + std::to_string(i), {c(rng), c(rng)}});
    const ODResult a = od_cost_matrix(villages, traders, big, 3);
    std::vector<Site> rv(villages.rbegin(), villages.rend()), rt(traders.rbegin(), traders.rend());
    const ODResult b = od_cost_matrix(rv, rt, big, 1);
    for (std::size_t o = 0; o < villages.size(); ++o) {
      for (std::size_t t = 0; t < traders.size(); ++t) {
        CHECK(a.matrix.at(o, t) == b.matrix.at(villages.size() - 1 - o, traders.size() - 1 - t));
      }
    }
  }
  SUBCASE("text export round trips") {
    ODMatrix od;
    od.origins = {"v1", "v2"};
    od.destinations = {"t1"};
    od.distances_m = {12, ODMatrix::kUnreachable};
    const std::string text = format_od_matrix(od);
    CHECK(text == "village_id,trader_id,distance_m\nv1,t1,12\nv2,t1,unreachable\n");
    CHECK(parse_od_matrix(text, "od.csv", od.origins, od.destinations).distances_m == od.distances_m);
  }
}

TEST_CASE("geojson line strings split at shared vertices") {
  const std::string doc = R"({
    "type": "FeatureCollection", "crs_kind": "metres",
    "features": [
      {"type": "Feature", "properties": {},
       "geometry": {"type": "LineString", "coordinates": [[0,0],[500,0],[1000,0]]}},
      {"type": "Feature", "properties": {"resolution": "coarse"},
       "geometry": {"type": "LineString", "coordinates": [[500,-700],[500,0],[500,900]]}}
    ]})";
  const RoadGraph g = parse_road_geojson(doc, "roads.geojson");
  // Endpoints (4) plus the crossing vertex.
  CHECK(g.node_count() == 5);
  CHECK(g.edge_count() == 4);
  int coarse = 0;
  for (const auto& e : g.edges()) coarse += e.resolution == Resolution::coarse;
  CHECK(coarse == 2);
  const auto d = shortest_paths_from(0, g);
  CHECK(d[*g.index_of(5)] == 500'000 + 900'000);
  CHECK_THROWS_AS(parse_road_geojson("{\"type\":\"Feature\"}", "x"), InputError);
}
