#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace timberflow {

struct Point {
  double x = 0;
  double y = 0;
};

double distance(Point a, Point b);

enum class Resolution { fine, coarse };

// Maps input coordinates to planar metres. Geographic input (lon/lat degrees)
// uses an equirectangular projection about a fixed origin.
struct Projection {
  bool geographic = false;
  double lon0 = 0;
  double lat0 = 0;

  Point apply(Point raw) const;
};

struct RoadEdge {
  int a = 0;  // node indices
  int b = 0;
  std::int64_t length_mm = 0;
  Resolution resolution = Resolution::fine;

  double length_m() const { return static_cast<double>(length_mm) / 1000.0; }
};

// Undirected road network. Node indices are dense; node ids come from the
// input file. Lengths are held in integer millimetres so path sums are exact.
class RoadGraph {
 public:
  int add_node(std::int64_t id, Point position);
  // Length defaults to the straight-line distance between the endpoints.
  int add_edge(std::int64_t a_id, std::int64_t b_id, std::optional<double> length_m,
               Resolution resolution = Resolution::fine);

  int node_count() const { return static_cast<int>(ids_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  std::int64_t node_id(int index) const { return ids_.at(index); }
  Point position(int index) const { return positions_.at(index); }
  std::optional<int> index_of(std::int64_t id) const;
  const std::vector<RoadEdge>& edges() const { return edges_; }
  const std::vector<std::pair<int, int>>& neighbours(int index) const { return adjacency_.at(index); }
  std::int64_t max_node_id() const;

  Projection projection;

 private:
  std::vector<std::int64_t> ids_;
  std::vector<Point> positions_;
  std::vector<RoadEdge> edges_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;  // (neighbour, edge)
  std::vector<std::pair<std::int64_t, int>> id_index_;       // sorted by id
};

// Edge-list road file:
//
//   crs,metres            (optional; or crs,lonlat)
//   node_id,x,y
//   ...
//   edge,node_a,node_b[,length_m][,resolution]
//   ...
//
// With lon/lat input the projection origin is the node centroid unless
// `projection` is given (so a coarse file can share the fine file's origin).
RoadGraph load_road_graph(const std::filesystem::path& path, std::optional<Projection> projection = std::nullopt);
RoadGraph parse_road_graph(const std::string& text, const std::string& source,
                           std::optional<Projection> projection = std::nullopt);

// GeoJSON FeatureCollection of LineString / MultiLineString features. Line
// strings are split into edges at their endpoints and at vertices shared with
// other line strings. Coordinates are lon/lat unless the collection carries
// "crs_kind": "metres". A "resolution" property of "coarse" tags the edges.
RoadGraph parse_road_geojson(const std::string& text, const std::string& source,
                             std::optional<Projection> projection = std::nullopt);

inline constexpr double kDefaultMergeToleranceM = 250.0;

// Adds the coarse graph to the fine one. Coarse nodes within `tolerance_m` of
// a fine node are unified with the nearest such node; the rest are renumbered
// after the largest fine id in ascending coarse-id order. Coarse edges that
// collapse to a point are dropped, duplicates keep the shortest length.
RoadGraph merge_road_graphs(const RoadGraph& fine, const RoadGraph& coarse,
                            double tolerance_m = kDefaultMergeToleranceM);

struct Site {
  std::string id;
  Point position;  // already projected
};

struct SiteSnap {
  std::string site;
  int node = -1;  // node index
  double snap_offset_m = 0;
};

// Nearest node by straight-line distance, ties to the lowest node id.
class NodeLocator {
 public:
  explicit NodeLocator(const RoadGraph& graph);
  int nearest(Point p) const;

 private:
  const RoadGraph& graph_;
  double cell_ = 1;
  double min_x_ = 0, min_y_ = 0;
  int cols_ = 1, rows_ = 1;
  std::vector<std::vector<int>> cells_;
};

SiteSnap snap_site(const Site& site, const RoadGraph& graph);

inline constexpr std::int64_t kUnreachableMm = -1;

// Dijkstra from one node; millimetres per node index, kUnreachableMm when
// disconnected. Heap ties are broken by node id.
std::vector<std::int64_t> shortest_paths_from(int source, const RoadGraph& graph);

struct ODMatrix {
  static constexpr std::int64_t kUnreachable = -1;

  std::vector<std::string> origins;       // village ids
  std::vector<std::string> destinations;  // trader ids
  std::vector<std::int64_t> distances_m;  // row-major, integer metres

  std::int64_t at(std::size_t origin, std::size_t destination) const {
    return distances_m[origin * destinations.size() + destination];
  }
  std::int64_t& at(std::size_t origin, std::size_t destination) {
    return distances_m[origin * destinations.size() + destination];
  }
  std::size_t unreachable_count() const;
};

struct ODResult {
  ODMatrix matrix;
  std::vector<SiteSnap> origin_snaps;
  std::vector<SiteSnap> destination_snaps;
  std::vector<std::pair<std::string, std::string>> unreachable;  // (village, trader)
};

// Road distance between snapped nodes, rounded half-up to whole metres. Snap
// offsets are reported but not added unless `include_snap_offsets`. Rows are
// spread over `threads` workers.
ODResult od_cost_matrix(const std::vector<Site>& origins, const std::vector<Site>& destinations,
                        const RoadGraph& graph, int threads = 1, bool include_snap_offsets = false);

// village_id,trader_id,distance_m ; unreachable pairs carry "unreachable".
std::string format_od_matrix(const ODMatrix& od);
ODMatrix parse_od_matrix(const std::string& text, const std::string& source,
                         const std::vector<std::string>& origins, const std::vector<std::string>& destinations);

}  // namespace timberflow
