#include "timberflow/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>

#include "timberflow/csv.hpp"
#include "timberflow/error.hpp"

namespace timberflow {

namespace {

bool has(const DatasetFiles& files, const std::string& name) { return files.count(name) != 0; }

const std::string& require(const DatasetFiles& files, const std::string& dataset, const std::string& name) {
  auto it = files.find(name);
  if (it == files.end()) throw InputError("dataset " + dataset + ": missing " + name);
  return it->second;
}

std::optional<std::string> cell(const CsvTable& t, std::size_t row, const std::optional<int>& col) {
  if (!col) return std::nullopt;
  const std::string& s = t.rows[row][*col];
  if (s.empty()) return std::nullopt;
  return s;
}

Units parse_count(const std::string& s, const std::string& where, const char* what) {
  const std::int64_t v = parse_int(s, where);
  if (v < 0) throw InputError(where + ": " + what + " must be >= 0");
  return v;
}

void check_header(const CsvTable& t, std::initializer_list<const char*> cols) {
  for (const char* c : cols) t.column(c);
}

RoadGraph parse_roads(const std::string& name, const std::string& text, std::optional<Projection> projection) {
  if (name.ends_with(".geojson")) return parse_road_geojson(text, name, projection);
  return parse_road_graph(text, name, projection);
}

std::optional<std::string> road_file(const DatasetFiles& files, const std::string& stem) {
  for (const char* ext : {".csv", ".geojson"}) {
    if (has(files, stem + ext)) return stem + ext;
  }
  return std::nullopt;
}

std::string od_cache_key(const std::string& fingerprint, const LoadOptions& o) {
  std::ostringstream key;
  key << "od-" << fingerprint.substr(0, 32) << "-s" << (o.include_snap_offsets ? 1 : 0) << "-t"
      << std::llround(o.merge_tolerance_m * 1000) << ".csv";
  return key.str();
}

}  // namespace

const std::vector<std::string>& recognised_dataset_files() {
  static const std::vector<std::string> names{"farms.csv",        "od.csv",        "roads.csv",
                                              "roads.geojson",    "roads_coarse.csv", "roads_coarse.geojson",
                                              "traders.csv",      "transactions.csv", "villages.csv",
                                              "yields.csv"};
  return names;
}

DatasetFiles read_dataset_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("dataset directory not found: " + dir.string());
  DatasetFiles files;
  for (const std::string& name : recognised_dataset_files()) {
    const auto p = dir / name;
    if (std::filesystem::is_regular_file(p)) files.emplace(name, read_file(p));
  }
  return files;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string dataset_fingerprint(const DatasetFiles& files) {
  std::string blob;
  for (const auto& [name, bytes] : files) {
    blob += name;
    blob += '\0';
    blob += std::to_string(bytes.size());
    blob += '\0';
    blob += bytes;
  }
  return sha256_hex(blob);
}

std::optional<std::filesystem::path> default_cache_dir() {
  const char* env = std::getenv("TIMBERFLOW_CACHE_DIR");
  if (env == nullptr || *env == '\0') return std::nullopt;
  return std::filesystem::path(env);
}

Dataset parse_dataset(const DatasetFiles& files, const std::string& name, const LoadOptions& options) {
  Dataset ds;
  ds.name = name;
  ds.fingerprint = dataset_fingerprint(files);
  MarketInstance& inst = ds.instance;

  // Roads first: their projection applies to site coordinates.
  const auto fine_name = road_file(files, "roads");
  const auto coarse_name = road_file(files, "roads_coarse");
  if (!has(files, "od.csv") && !fine_name) {
    throw InputError("dataset " + name + ": needs od.csv or a roads.csv / roads.geojson file");
  }
  if (coarse_name && !fine_name) throw InputError("dataset " + name + ": roads_coarse without fine roads");
  std::optional<RoadGraph> roads;
  if (fine_name && options.compute_od && !has(files, "od.csv")) {
    roads = parse_roads(*fine_name, files.at(*fine_name), std::nullopt);
    if (coarse_name) {
      std::optional<Projection> shared;
      if (roads->projection.geographic) shared = roads->projection;
      const RoadGraph coarse = parse_roads(*coarse_name, files.at(*coarse_name), shared);
      if (coarse.projection.geographic != roads->projection.geographic) {
        throw InputError(*coarse_name + ": coordinate system differs from " + *fine_name);
      }
      roads = merge_road_graphs(*roads, coarse, options.merge_tolerance_m);
    }
    ds.road_nodes = roads->node_count();
    ds.road_edges = roads->edge_count();
  }
  const Projection projection = roads ? roads->projection : Projection{};

  auto read_sites = [&](const std::string& file, const char* id_col, auto&& add) {
    const CsvTable t = parse_csv(require(files, name, file), file);
    check_header(t, {id_col, "x", "y"});
    const int ci = t.column(id_col), cx = t.column("x"), cy = t.column("y");
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      if (row[ci].empty()) throw InputError(t.where(r) + ": empty " + id_col);
      if (!seen.insert(row[ci]).second) throw InputError(t.where(r) + ": duplicate " + id_col + " '" + row[ci] + "'");
      const Point raw{parse_double(row[cx], t.where(r)), parse_double(row[cy], t.where(r))};
      add(row[ci], projection.apply(raw));
    }
  };
  read_sites("villages.csv", "village_id", [&](const std::string& id, Point p) {
    inst.villages.push_back({id, p, {}});
  });
  read_sites("traders.csv", "trader_id", [&](const std::string& id, Point p) { inst.traders.push_back({id, p}); });
  inst.reindex();

  std::map<std::string, int> farm_index;
  {
    const CsvTable t = parse_csv(require(files, name, "farms.csv"), "farms.csv");
    const int ci = t.column("farm_id"), cv = t.column("village_id"), cl = t.column("land_use_type"),
              ca = t.column("area_ha");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const auto v = inst.village_index(row[cv]);
      if (!v) throw InputError(t.where(r) + ": unknown village_id '" + row[cv] + "'");
      if (row[cl].empty()) throw InputError(t.where(r) + ": empty land_use_type");
      const double area = parse_double(row[ca], t.where(r));
      if (!(area > 0)) throw InputError(t.where(r) + ": area_ha must be > 0");
      const int idx = static_cast<int>(inst.farms.size());
      if (!farm_index.emplace(row[ci], idx).second) {
        throw InputError(t.where(r) + ": duplicate farm_id '" + row[ci] + "'");
      }
      inst.farms.push_back({row[ci], *v, row[cl], area});
      inst.villages[*v].farms.push_back(idx);
    }
  }

  {
    const CsvTable t = parse_csv(require(files, name, "transactions.csv"), "transactions.csv");
    const int ci = t.column("txn_id"), cv = t.column("village_id"), ct = t.column("trader_id"),
              ch = t.column("trees_harvested");
    const auto cu = t.find_column("trees_uprooted"), cm = t.find_column("volume_m3"), cf = t.find_column("farm_id");
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const std::string where = t.where(r);
      if (!seen.insert(row[ci]).second) throw InputError(where + ": duplicate txn_id '" + row[ci] + "'");
      Transaction x;
      x.id = row[ci];
      const auto v = inst.village_index(row[cv]);
      if (!v) throw InputError(where + ": unknown village_id '" + row[cv] + "'");
      const auto tr = inst.trader_index(row[ct]);
      if (!tr) throw InputError(where + ": unknown trader_id '" + row[ct] + "'");
      x.village = *v;
      x.trader = *tr;
      x.trees = parse_count(row[ch], where, "trees_harvested");
      if (auto s = cell(t, r, cu)) {
        x.uprooted = parse_count(*s, where, "trees_uprooted");
        if (*x.uprooted > x.trees) throw InputError(where + ": trees_uprooted exceeds trees_harvested");
      }
      if (auto s = cell(t, r, cm)) {
        x.volume_m3 = parse_double(*s, where);
        if (*x.volume_m3 < 0) throw InputError(where + ": volume_m3 must be >= 0");
      }
      if (auto s = cell(t, r, cf)) {
        auto f = farm_index.find(*s);
        if (f == farm_index.end()) throw InputError(where + ": unknown farm_id '" + *s + "'");
        if (inst.farms[f->second].village != x.village) {
          throw InputError(where + ": farm '" + *s + "' does not belong to village '" + row[cv] + "'");
        }
        x.farm = f->second;
      }
      inst.transactions.push_back(std::move(x));
    }
  }

  if (has(files, "yields.csv")) {
    const CsvTable t = parse_csv(files.at("yields.csv"), "yields.csv");
    const int cl = t.column("land_use_type"), cy = t.column("trees_per_ha");
    YieldTable y;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double v = parse_double(t.rows[r][cy], t.where(r));
      if (v < 0) throw InputError(t.where(r) + ": trees_per_ha must be >= 0");
      if (!y.emplace(t.rows[r][cl], v).second) {
        throw InputError(t.where(r) + ": duplicate land_use_type '" + t.rows[r][cl] + "'");
      }
    }
    for (const Farm& f : inst.farms) {
      if (!y.count(f.land_use)) throw InputError("yields.csv: no entry for land_use_type '" + f.land_use + "'");
    }
    inst.yield_override = std::move(y);
  } else {
    effective_yields(inst);  // fails early when farm attribution is missing
  }

  std::vector<std::string> village_ids, trader_ids;
  for (const auto& v : inst.villages) village_ids.push_back(v.id);
  for (const auto& t : inst.traders) trader_ids.push_back(t.id);

  if (has(files, "od.csv")) {
    inst.od = parse_od_matrix(files.at("od.csv"), "od.csv", village_ids, trader_ids);
    ds.od_source = "od.csv";
  } else if (options.compute_od) {
    std::optional<std::filesystem::path> cached;
    if (options.cache_dir) cached = *options.cache_dir / od_cache_key(ds.fingerprint, options);
    if (cached && std::filesystem::is_regular_file(*cached)) {
      inst.od = parse_od_matrix(read_file(*cached), cached->string(), village_ids, trader_ids);
      ds.od_source = "cache";
    } else {
      std::vector<Site> vs, ts;
      for (const auto& v : inst.villages) vs.push_back({v.id, v.position});
      for (const auto& t : inst.traders) ts.push_back({t.id, t.position});
      ODResult r = od_cost_matrix(vs, ts, *roads, options.threads, options.include_snap_offsets);
      inst.od = std::move(r.matrix);
      ds.od_source = "roads";
      if (cached) {
        const auto tmp = cached->string() + ".tmp" + std::to_string(std::random_device{}());
        write_file(tmp, format_od_matrix(inst.od));
        std::filesystem::rename(tmp, *cached);
      }
    }
  } else {
    inst.od.origins = village_ids;
    inst.od.destinations = trader_ids;
    inst.od.distances_m.assign(village_ids.size() * trader_ids.size(), ODMatrix::kUnreachable);
    ds.od_source = "skipped";
  }

  if (ds.od_source != "skipped") {
    for (std::size_t v = 0; v < village_ids.size(); ++v) {
      for (std::size_t t = 0; t < trader_ids.size(); ++t) {
        if (inst.od.at(v, t) == ODMatrix::kUnreachable) ds.unreachable.push_back({village_ids[v], trader_ids[t]});
      }
    }
    if (!ds.unreachable.empty()) {
      ds.warnings.push_back(std::to_string(ds.unreachable.size()) + " village-trader pairs have no road connection");
    }
    std::set<std::pair<int, int>> transacting;
    for (const auto& x : inst.transactions) transacting.insert({x.village, x.trader});
    int cut = 0;
    for (const auto& [v, t] : transacting) cut += inst.od.at(v, t) == ODMatrix::kUnreachable;
    if (cut > 0) {
      ds.warnings.push_back(std::to_string(cut) + " transacting pairs are unreachable; historical cost is undefined");
    }
  }
  int bare = 0;
  for (const auto& v : inst.villages) bare += v.farms.empty();
  if (bare > 0) ds.warnings.push_back(std::to_string(bare) + " villages have no farms (zero potential supply)");
  const auto demands = trader_demands(inst);
  const auto idle = std::count(demands.begin(), demands.end(), 0);
  if (idle > 0) ds.warnings.push_back(std::to_string(idle) + " traders have no transactions (zero demand)");
  if (inst.transactions.empty()) ds.warnings.push_back("no transactions: historical cost is zero");
  return ds;
}

Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options) {
  return parse_dataset(read_dataset_files(dir), dir.filename().string(), options);
}

std::string dataset_summary(const Dataset& ds) {
  const auto& inst = ds.instance;
  std::set<std::string> land_uses;
  for (const auto& f : inst.farms) land_uses.insert(f.land_use);
  Units trees = 0;
  for (const auto& x : inst.transactions) trees += x.trees;
  std::ostringstream out;
  out << "dataset       " << ds.name << "\n"
      << "fingerprint   " << ds.fingerprint << "\n"
      << "villages      " << inst.villages.size() << "\n"
      << "farms         " << inst.farms.size() << "\n"
      << "land uses     " << land_uses.size() << "\n"
      << "traders       " << inst.traders.size() << "\n"
      << "transactions  " << inst.transactions.size() << " (" << trees << " trees)\n"
      << "yields        " << (inst.yield_override ? "yields.csv" : "computed from farm harvests") << "\n"
      << "od matrix     " << ds.od_source;
  if (ds.road_nodes > 0) out << " (" << ds.road_nodes << " road nodes, " << ds.road_edges << " edges)";
  out << "\n"
      << "unreachable   " << ds.unreachable.size() << "\n";
  for (const auto& w : ds.warnings) out << "warning: " << w << "\n";
  return out.str();
}

}  // namespace timberflow
