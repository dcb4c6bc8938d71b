#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timberflow/market.hpp"
#include "timberflow/road_graph.hpp"

namespace timberflow {

// File name -> bytes for the recognised dataset files:
//
//   villages.csv      village_id,x,y
//   farms.csv         farm_id,village_id,land_use_type,area_ha
//   traders.csv       trader_id,x,y
//   transactions.csv  txn_id,village_id,trader_id,trees_harvested[,trees_uprooted][,volume_m3][,farm_id]
//   yields.csv        land_use_type,trees_per_ha          (optional)
//   od.csv            village_id,trader_id,distance_m     (or a road file)
//   roads.csv | roads.geojson                             (fine roads)
//   roads_coarse.csv | roads_coarse.geojson               (optional)
using DatasetFiles = std::map<std::string, std::string>;

const std::vector<std::string>& recognised_dataset_files();

// Reads whichever recognised files exist in `dir`.
DatasetFiles read_dataset_files(const std::filesystem::path& dir);

// SHA-256 over (name, size, bytes) of each file in name order, hex encoded.
std::string dataset_fingerprint(const DatasetFiles& files);

std::string sha256_hex(std::string_view bytes);

struct LoadOptions {
  int threads = 1;
  bool include_snap_offsets = false;
  double merge_tolerance_m = kDefaultMergeToleranceM;
  bool compute_od = true;  // false: skip road loading and Dijkstra (validate --quick)
  std::optional<std::filesystem::path> cache_dir;  // OD matrix cache; see default_cache_dir
};

// TIMBERFLOW_CACHE_DIR when set.
std::optional<std::filesystem::path> default_cache_dir();

struct Dataset {
  std::string name;  // directory name or registry label
  std::string fingerprint;
  MarketInstance instance;
  std::string od_source;  // "od.csv", "roads", "cache"
  int road_nodes = 0;
  int road_edges = 0;
  std::vector<std::pair<std::string, std::string>> unreachable;  // (village, trader)
  std::vector<std::string> warnings;
};

Dataset parse_dataset(const DatasetFiles& files, const std::string& name, const LoadOptions& options = {});
Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options = {});

// Multi-line human summary of counts and coverage, as printed by `validate`.
std::string dataset_summary(const Dataset& ds);

}  // namespace timberflow
