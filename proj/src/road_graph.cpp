#include "timberflow/road_graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_map>

#include "json.hpp"
#include "timberflow/csv.hpp"
#include "timberflow/error.hpp"

namespace timberflow {
namespace {

constexpr double kEarthRadiusM = 6371008.8;
constexpr double kPi = 3.14159265358979323846;

std::int64_t to_mm(double metres) { return std::max<std::int64_t>(1, std::llround(metres * 1000.0)); }

Projection centroid_projection(const std::vector<Point>& raw) {
  Projection p;
  p.geographic = true;
  if (raw.empty()) return p;
  double sx = 0, sy = 0;
  for (Point q : raw) {
    sx += q.x;
    sy += q.y;
  }
  p.lon0 = sx / static_cast<double>(raw.size());
  p.lat0 = sy / static_cast<double>(raw.size());
  return p;
}

Resolution parse_resolution(std::string_view s, const std::string& where) {
  if (s.empty() || s == "fine") return Resolution::fine;
  if (s == "coarse") return Resolution::coarse;
  throw InputError(where + ": resolution must be 'fine' or 'coarse', found '" + std::string(s) + "'");
}

using EdgeKey = std::tuple<std::int64_t, std::int64_t, Resolution>;

EdgeKey edge_key(std::int64_t a, std::int64_t b, Resolution r) { return {std::min(a, b), std::max(a, b), r}; }

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point Projection::apply(Point raw) const {
  if (!geographic) return raw;
  const double k = kPi / 180.0;
  return {kEarthRadiusM * (raw.x - lon0) * k * std::cos(lat0 * k), kEarthRadiusM * (raw.y - lat0) * k};
}

int RoadGraph::add_node(std::int64_t id, Point position) {
  if (!std::isfinite(position.x) || !std::isfinite(position.y)) {
    throw InputError("node " + std::to_string(id) + " has non-finite coordinates");
  }
  auto it = std::lower_bound(id_index_.begin(), id_index_.end(), std::make_pair(id, std::numeric_limits<int>::min()));
  if (it != id_index_.end() && it->first == id) throw InputError("duplicate node id " + std::to_string(id));
  const int index = node_count();
  id_index_.insert(it, {id, index});
  ids_.push_back(id);
  positions_.push_back(position);
  adjacency_.emplace_back();
  return index;
}

std::optional<int> RoadGraph::index_of(std::int64_t id) const {
  auto it = std::lower_bound(id_index_.begin(), id_index_.end(), std::make_pair(id, std::numeric_limits<int>::min()));
  if (it == id_index_.end() || it->first != id) return std::nullopt;
  return it->second;
}

std::int64_t RoadGraph::max_node_id() const { return id_index_.empty() ? 0 : id_index_.back().first; }

int RoadGraph::add_edge(std::int64_t a_id, std::int64_t b_id, std::optional<double> length_m, Resolution resolution) {
  const auto a = index_of(a_id);
  const auto b = index_of(b_id);
  if (!a || !b) {
    throw InputError("edge references unknown node " + std::to_string(!a ? a_id : b_id));
  }
  if (*a == *b) throw InputError("edge from node " + std::to_string(a_id) + " to itself");
  const double length = length_m ? *length_m : distance(positions_[*a], positions_[*b]);
  if (!(length > 0) || !std::isfinite(length)) {
    throw InputError("edge " + std::to_string(a_id) + "-" + std::to_string(b_id) + " has non-positive length");
  }
  const int index = edge_count();
  edges_.push_back({*a, *b, to_mm(length), resolution});
  adjacency_[*a].push_back({*b, index});
  adjacency_[*b].push_back({*a, index});
  return index;
}

RoadGraph parse_road_graph(const std::string& text, const std::string& source, std::optional<Projection> projection) {
  enum class Section { preamble, nodes, edges } section = Section::preamble;
  bool geographic = false;
  struct RawNode {
    std::int64_t id;
    Point p;
  };
  struct RawEdge {
    std::int64_t a, b;
    std::optional<double> length;
    Resolution resolution;
    std::string where;
  };
  std::vector<RawNode> nodes;
  std::vector<RawEdge> edges;
  std::vector<std::string> edge_header;

  std::istringstream in(text);
  std::string raw_line;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (!raw_line.empty() && raw_line.back() == '\r') raw_line.pop_back();
    const auto first = raw_line.find_first_not_of(" \t");
    if (first == std::string::npos || raw_line[first] == '#') continue;
    const std::vector<std::string> f = split_csv_line(raw_line);

    if (f[0] == "crs") {
      if (section != Section::preamble || f.size() != 2) throw InputError(where + ": crs line must precede nodes");
      if (f[1] == "lonlat") {
        geographic = true;
      } else if (f[1] != "metres") {
        throw InputError(where + ": crs must be 'metres' or 'lonlat'");
      }
      continue;
    }
    if (f[0] == "node_id") {
      if (section != Section::preamble || f.size() != 3 || f[1] != "x" || f[2] != "y") {
        throw InputError(where + ": expected header node_id,x,y before the edge section");
      }
      section = Section::nodes;
      continue;
    }
    if (f[0] == "edge") {
      if (section != Section::nodes) throw InputError(where + ": edge section must follow the node section");
      if (f.size() < 3 || f[1] != "node_a" || f[2] != "node_b") {
        throw InputError(where + ": expected header edge,node_a,node_b[,length_m][,resolution]");
      }
      for (std::size_t i = 3; i < f.size(); ++i) {
        if (f[i] != "length_m" && f[i] != "resolution") throw InputError(where + ": unknown edge column " + f[i]);
      }
      edge_header = f;
      section = Section::edges;
      continue;
    }
    if (section == Section::nodes) {
      if (f.size() != 3) throw InputError(where + ": node row needs 3 fields");
      nodes.push_back({parse_int(f[0], where), {parse_double(f[1], where), parse_double(f[2], where)}});
    } else if (section == Section::edges) {
      if (f.size() != edge_header.size()) {
        throw InputError(where + ": expected " + std::to_string(edge_header.size()) + " fields");
      }
      RawEdge e{parse_int(f[1], where), parse_int(f[2], where), std::nullopt, Resolution::fine, where};
      for (std::size_t i = 3; i < f.size(); ++i) {
        if (edge_header[i] == "length_m" && !f[i].empty()) {
          e.length = parse_double(f[i], where);
          if (*e.length <= 0) throw InputError(where + ": non-positive length");
        }
        if (edge_header[i] == "resolution") e.resolution = parse_resolution(f[i], where);
      }
      edges.push_back(std::move(e));
    } else {
      throw InputError(where + ": data before the node_id,x,y header");
    }
  }
  if (section == Section::preamble) throw InputError(source + ": no node section");

  RoadGraph g;
  if (geographic) {
    if (projection && projection->geographic) {
      g.projection = *projection;
    } else {
      std::vector<Point> raw;
      for (const auto& n : nodes) raw.push_back(n.p);
      g.projection = centroid_projection(raw);
    }
  }
  for (const auto& n : nodes) {
    try {
      g.add_node(n.id, g.projection.apply(n.p));
    } catch (const InputError& e) {
      throw InputError(source + ": " + e.what());
    }
  }
  std::set<EdgeKey> seen;
  for (const auto& e : edges) {
    if (!seen.insert(edge_key(e.a, e.b, e.resolution)).second) {
      throw InputError(e.where + ": duplicate edge " + std::to_string(e.a) + "-" + std::to_string(e.b));
    }
    try {
      g.add_edge(e.a, e.b, e.length, e.resolution);
    } catch (const InputError& err) {
      throw InputError(e.where + ": " + err.what());
    }
  }
  return g;
}

RoadGraph load_road_graph(const std::filesystem::path& path, std::optional<Projection> projection) {
  const std::string text = read_file(path);
  if (path.extension() == ".geojson" || path.extension() == ".json") {
    return parse_road_geojson(text, path.filename().string(), projection);
  }
  return parse_road_graph(text, path.filename().string(), projection);
}

RoadGraph parse_road_geojson(const std::string& text, const std::string& source, std::optional<Projection> projection) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(source + ": " + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
    throw InputError(source + ": expected a GeoJSON FeatureCollection");
  }
  const bool geographic = doc.value("crs_kind", "lonlat") != "metres";

  struct Line {
    std::vector<Point> raw;
    Resolution resolution;
  };
  std::vector<Line> lines;
  auto read_coords = [&](const nlohmann::json& coords, Resolution r, std::size_t feature) {
    Line line{{}, r};
    for (const auto& c : coords) {
      if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
        throw InputError(source + ": feature " + std::to_string(feature) + " has a malformed coordinate");
      }
      line.raw.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    if (line.raw.size() < 2) throw InputError(source + ": feature " + std::to_string(feature) + " has < 2 vertices");
    lines.push_back(std::move(line));
  };
  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const auto& geom = feature.at("geometry");
    Resolution r = Resolution::fine;
    if (feature.contains("properties") && feature["properties"].is_object()) {
      r = parse_resolution(feature["properties"].value("resolution", ""), source);
    }
    const std::string type = geom.value("type", "");
    if (type == "LineString") {
      read_coords(geom.at("coordinates"), r, index);
    } else if (type == "MultiLineString") {
      for (const auto& part : geom.at("coordinates")) read_coords(part, r, index);
    } else {
      throw InputError(source + ": feature " + std::to_string(index) + " is not a line string");
    }
    ++index;
  }

  RoadGraph g;
  if (geographic) {
    if (projection && projection->geographic) {
      g.projection = *projection;
    } else {
      std::vector<Point> all;
      for (const auto& l : lines) all.insert(all.end(), l.raw.begin(), l.raw.end());
      g.projection = centroid_projection(all);
    }
  }

  using Key = std::pair<double, double>;
  std::map<Key, int> occurrences;
  for (const auto& l : lines) {
    for (std::size_t i = 0; i < l.raw.size(); ++i) {
      const bool endpoint = i == 0 || i + 1 == l.raw.size();
      occurrences[{l.raw[i].x, l.raw[i].y}] += endpoint ? 2 : 1;
    }
  }
  std::map<Key, std::int64_t> node_ids;
  auto node_for = [&](Point raw) {
    const Key k{raw.x, raw.y};
    auto it = node_ids.find(k);
    if (it != node_ids.end()) return it->second;
    const std::int64_t id = static_cast<std::int64_t>(node_ids.size()) + 1;
    node_ids.emplace(k, id);
    g.add_node(id, g.projection.apply(raw));
    return id;
  };

  struct Pending {
    std::int64_t a, b;
    double length;
    Resolution r;
  };
  std::vector<Pending> pending;
  std::map<EdgeKey, std::size_t> by_key;
  for (const auto& l : lines) {
    std::int64_t from = node_for(l.raw.front());
    double length = 0;
    for (std::size_t i = 1; i < l.raw.size(); ++i) {
      length += distance(g.projection.apply(l.raw[i - 1]), g.projection.apply(l.raw[i]));
      if (occurrences[{l.raw[i].x, l.raw[i].y}] < 2) continue;
      const std::int64_t to = node_for(l.raw[i]);
      if (to != from && length > 0) {
        const EdgeKey key = edge_key(from, to, l.resolution);
        auto it = by_key.find(key);
        if (it == by_key.end()) {
          by_key.emplace(key, pending.size());
          pending.push_back({from, to, length, l.resolution});
        } else {
          pending[it->second].length = std::min(pending[it->second].length, length);
        }
      }
      from = to;
      length = 0;
    }
  }
  for (const auto& p : pending) g.add_edge(p.a, p.b, p.length, p.r);
  return g;
}

RoadGraph merge_road_graphs(const RoadGraph& fine, const RoadGraph& coarse, double tolerance_m) {
  RoadGraph merged;
  merged.projection = fine.projection;
  for (int i = 0; i < fine.node_count(); ++i) merged.add_node(fine.node_id(i), fine.position(i));

  std::vector<int> coarse_order(static_cast<std::size_t>(coarse.node_count()));
  for (int i = 0; i < coarse.node_count(); ++i) coarse_order[i] = i;
  std::sort(coarse_order.begin(), coarse_order.end(),
            [&](int a, int b) { return coarse.node_id(a) < coarse.node_id(b); });

  std::vector<std::int64_t> mapped(static_cast<std::size_t>(coarse.node_count()));
  std::int64_t next_id = fine.max_node_id() + 1;
  std::optional<NodeLocator> locator;
  if (fine.node_count() > 0) locator.emplace(fine);
  for (int c : coarse_order) {
    const Point p = coarse.position(c);
    if (locator) {
      const int nearest = locator->nearest(p);
      if (distance(p, fine.position(nearest)) <= tolerance_m) {
        mapped[c] = fine.node_id(nearest);
        continue;
      }
    }
    mapped[c] = next_id++;
    merged.add_node(mapped[c], p);
  }

  for (const RoadEdge& e : fine.edges()) {
    merged.add_edge(fine.node_id(e.a), fine.node_id(e.b), e.length_m(), e.resolution);
  }
  std::set<EdgeKey> existing;
  for (const RoadEdge& e : fine.edges()) existing.insert(edge_key(fine.node_id(e.a), fine.node_id(e.b), e.resolution));

  std::map<EdgeKey, std::int64_t> shortest;
  std::vector<EdgeKey> order;
  for (const RoadEdge& e : coarse.edges()) {
    const std::int64_t a = mapped[e.a];
    const std::int64_t b = mapped[e.b];
    if (a == b) continue;
    const EdgeKey key = edge_key(a, b, Resolution::coarse);
    if (existing.count(key)) continue;
    auto [it, inserted] = shortest.emplace(key, e.length_mm);
    if (inserted) {
      order.push_back(key);
    } else {
      it->second = std::min(it->second, e.length_mm);
    }
  }
  for (const EdgeKey& key : order) {
    merged.add_edge(std::get<0>(key), std::get<1>(key), static_cast<double>(shortest[key]) / 1000.0,
                    Resolution::coarse);
  }
  return merged;
}

NodeLocator::NodeLocator(const RoadGraph& graph) : graph_(graph) {
  const int n = graph.node_count();
  if (n == 0) throw InputError("cannot snap to an empty road graph");
  double max_x = graph.position(0).x, max_y = graph.position(0).y;
  min_x_ = max_x;
  min_y_ = max_y;
  for (int i = 1; i < n; ++i) {
    const Point p = graph.position(i);
    min_x_ = std::min(min_x_, p.x);
    min_y_ = std::min(min_y_, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  const double w = std::max(max_x - min_x_, 1.0);
  const double h = std::max(max_y - min_y_, 1.0);
  cell_ = std::max(std::sqrt(w * h / n) * 1.5, 1.0);
  cols_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
  rows_ = std::max(1, static_cast<int>(std::ceil(h / cell_)));
  while (static_cast<std::int64_t>(cols_) * rows_ > 4LL * n + 16) {
    cell_ *= 2;
    cols_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
    rows_ = std::max(1, static_cast<int>(std::ceil(h / cell_)));
  }
  cells_.resize(static_cast<std::size_t>(cols_) * rows_);
  for (int i = 0; i < n; ++i) {
    const Point p = graph.position(i);
    const int c = std::min(cols_ - 1, static_cast<int>((p.x - min_x_) / cell_));
    const int r = std::min(rows_ - 1, static_cast<int>((p.y - min_y_) / cell_));
    cells_[static_cast<std::size_t>(r) * cols_ + c].push_back(i);
  }
}

int NodeLocator::nearest(Point p) const {
  const int cx = std::clamp(static_cast<int>(std::floor((p.x - min_x_) / cell_)), 0, cols_ - 1);
  const int cy = std::clamp(static_cast<int>(std::floor((p.y - min_y_) / cell_)), 0, rows_ - 1);
  int best = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  auto consider = [&](int i) {
    const Point q = graph_.position(i);
    const double sq = (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y);
    if (sq < best_sq || (sq == best_sq && graph_.node_id(i) < graph_.node_id(best))) {
      best = i;
      best_sq = sq;
    }
  };
  const int max_ring = std::max(cols_, rows_);
  for (int k = 0; k <= max_ring; ++k) {
    for (int y = cy - k; y <= cy + k; ++y) {
      if (y < 0 || y >= rows_) continue;
      for (int x = cx - k; x <= cx + k; ++x) {
        if (x < 0 || x >= cols_) continue;
        if (std::max(std::abs(x - cx), std::abs(y - cy)) != k) continue;
        for (int i : cells_[static_cast<std::size_t>(y) * cols_ + x]) consider(i);
      }
    }
    if (best >= 0) {
      // Distance from p to the outside of the searched block of cells.
      const double left = p.x - (min_x_ + (cx - k) * cell_);
      const double right = (min_x_ + (cx + k + 1) * cell_) - p.x;
      const double down = p.y - (min_y_ + (cy - k) * cell_);
      const double up = (min_y_ + (cy + k + 1) * cell_) - p.y;
      const double margin = std::min({left, right, down, up});
      if (margin > 0 && best_sq < margin * margin) break;
    }
  }
  return best;
}

SiteSnap snap_site(const Site& site, const RoadGraph& graph) {
  const NodeLocator locator(graph);
  const int node = locator.nearest(site.position);
  return {site.id, node, distance(site.position, graph.position(node))};
}

std::vector<std::int64_t> shortest_paths_from(int source, const RoadGraph& graph) {
  if (source < 0 || source >= graph.node_count()) throw InputError("unknown source node");
  std::vector<std::int64_t> dist(static_cast<std::size_t>(graph.node_count()), kUnreachableMm);
  using Entry = std::tuple<std::int64_t, std::int64_t, int>;  // (distance, node id, index)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[source] = 0;
  heap.push({0, graph.node_id(source), source});
  while (!heap.empty()) {
    const auto [d, id, u] = heap.top();
    heap.pop();
    if (d != dist[u]) continue;
    for (const auto& [v, e] : graph.neighbours(u)) {
      const std::int64_t cand = d + graph.edges()[e].length_mm;
      if (dist[v] == kUnreachableMm || cand < dist[v]) {
        dist[v] = cand;
        heap.push({cand, graph.node_id(v), v});
      }
    }
  }
  return dist;
}

std::size_t ODMatrix::unreachable_count() const {
  return static_cast<std::size_t>(std::count(distances_m.begin(), distances_m.end(), kUnreachable));
}

ODResult od_cost_matrix(const std::vector<Site>& origins, const std::vector<Site>& destinations,
                        const RoadGraph& graph, int threads, bool include_snap_offsets) {
  const NodeLocator locator(graph);
  ODResult out;
  for (const Site& s : origins) {
    const int n = locator.nearest(s.position);
    out.origin_snaps.push_back({s.id, n, distance(s.position, graph.position(n))});
    out.matrix.origins.push_back(s.id);
  }
  for (const Site& s : destinations) {
    const int n = locator.nearest(s.position);
    out.destination_snaps.push_back({s.id, n, distance(s.position, graph.position(n))});
    out.matrix.destinations.push_back(s.id);
  }
  out.matrix.distances_m.assign(origins.size() * destinations.size(), ODMatrix::kUnreachable);

  // One tree per distinct origin node.
  std::vector<int> roots;
  std::unordered_map<int, std::size_t> root_slot;
  for (const SiteSnap& s : out.origin_snaps) {
    if (root_slot.emplace(s.node, roots.size()).second) roots.push_back(s.node);
  }
  std::vector<std::vector<std::int64_t>> to_destinations(roots.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < roots.size();) {
      const std::vector<std::int64_t> dist = shortest_paths_from(roots[r], graph);
      auto& row = to_destinations[r];
      row.reserve(destinations.size());
      for (const SiteSnap& d : out.destination_snaps) row.push_back(dist[d.node]);
    }
  };
  const int workers = std::clamp(threads, 1, std::max(1, static_cast<int>(roots.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }

  for (std::size_t o = 0; o < origins.size(); ++o) {
    const auto& row = to_destinations[root_slot[out.origin_snaps[o].node]];
    for (std::size_t d = 0; d < destinations.size(); ++d) {
      std::int64_t mm = row[d];
      if (mm == kUnreachableMm) {
        out.unreachable.emplace_back(origins[o].id, destinations[d].id);
        continue;
      }
      if (include_snap_offsets) {
        mm += std::llround((out.origin_snaps[o].snap_offset_m + out.destination_snaps[d].snap_offset_m) * 1000.0);
      }
      out.matrix.at(o, d) = (mm + 500) / 1000;
    }
  }
  return out;
}

std::string format_od_matrix(const ODMatrix& od) {
  std::string out = "village_id,trader_id,distance_m\n";
  for (std::size_t o = 0; o < od.origins.size(); ++o) {
    for (std::size_t d = 0; d < od.destinations.size(); ++d) {
      const std::int64_t v = od.at(o, d);
      out += od.origins[o] + "," + od.destinations[d] + "," +
             (v == ODMatrix::kUnreachable ? std::string("unreachable") : std::to_string(v)) + "\n";
    }
  }
  return out;
}

ODMatrix parse_od_matrix(const std::string& text, const std::string& source, const std::vector<std::string>& origins,
                         const std::vector<std::string>& destinations) {
  const CsvTable t = parse_csv(text, source);
  const int cv = t.column("village_id"), ct = t.column("trader_id"), cd = t.column("distance_m");
  ODMatrix od;
  od.origins = origins;
  od.destinations = destinations;
  od.distances_m.assign(origins.size() * destinations.size(), ODMatrix::kUnreachable);
  std::unordered_map<std::string, std::size_t> oi, di;
  for (std::size_t i = 0; i < origins.size(); ++i) oi.emplace(origins[i], i);
  for (std::size_t i = 0; i < destinations.size(); ++i) di.emplace(destinations[i], i);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    auto o = oi.find(row[cv]);
    auto d = di.find(row[ct]);
    if (o == oi.end()) throw InputError(t.where(r) + ": unknown village '" + row[cv] + "'");
    if (d == di.end()) throw InputError(t.where(r) + ": unknown trader '" + row[ct] + "'");
    if (row[cd] == "unreachable" || row[cd].empty()) continue;
    const double metres = parse_double(row[cd], t.where(r));
    if (metres < 0) throw InputError(t.where(r) + ": negative distance");
    od.at(o->second, d->second) = std::llround(metres);
  }
  return od;
}

}  // namespace timberflow
