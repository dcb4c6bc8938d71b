#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "timberflow/clustering.hpp"
#include "timberflow/dataset.hpp"
#include "timberflow/market.hpp"

namespace timberflow {

struct ScenarioConfig {
  double supply_scale = 1.0;  // remaining share of supply, (0, 1]
  Units trader_floor = 0;
  bool clustering = false;
  SupplyMode supply_mode = SupplyMode::potential;
  SolverKind solver = SolverKind::cycle_canceling;
  std::uint64_t seed = 1;
  Units market_power_threshold = 2000;
  ClusterFeature cluster_feature = ClusterFeature::trees;
  HistoricalCost historical_cost = HistoricalCost::trees;
  bool include_snap_offsets = false;
  double merge_tolerance_m = kDefaultMergeToleranceM;
  std::int64_t max_unreachable_pairs = -1;  // -1: no limit
  std::string dataset;  // path reference; not part of the canonical echo

  bool operator==(const ScenarioConfig&) const = default;
};

// Throws InputError naming the offending field.
void validate_config(const ScenarioConfig& cfg);

// JSON object with any subset of the fields above; unknown fields are errors.
ScenarioConfig parse_scenario_config(std::string_view json_text, const std::string& source);
std::string scenario_config_json(const ScenarioConfig& cfg);  // canonical, all fields

std::string to_string(SupplyMode mode);
std::string to_string(ClusterFeature feature);
std::string to_string(HistoricalCost mode);

LoadOptions load_options(const ScenarioConfig& cfg, int threads = 1);

// Supply scaled by a share given in parts per million, floored.
Units scale_supply(Units supply, std::int64_t share_ppm);
std::int64_t share_ppm(double share);

// floor(share * b_v) for each village.
std::vector<Units> apply_supply_reduction(const std::vector<Units>& supplies, double share);

// min(floor, b_t) per trader; InfeasibleError when the floors exceed total supply.
std::vector<Units> apply_trader_floor(const std::vector<Units>& demands, Units floor,
                                      const std::vector<Units>& supplies);

struct CurvePoint {
  Units value = 0;
  Units at_least = 0;  // observations >= value
  bool operator==(const CurvePoint&) const = default;
};

struct SurvivalCurve {
  std::string name;
  Units observations = 0;
  std::vector<CurvePoint> points;  // strictly increasing values

  double share(std::size_t i) const { return static_cast<double>(points[i].at_least) / observations; }
  bool operator==(const SurvivalCurve&) const = default;
};

SurvivalCurve survival_function(std::vector<Units> values, std::string name = {});

struct Warning {
  std::string code;
  std::string message;
  bool operator==(const Warning&) const = default;
};

struct ClassSummary {
  std::string label;
  std::vector<std::string> traders;
  Units feature_total = 0;
  Units demand_total = 0;
  bool operator==(const ClassSummary&) const = default;
};

struct ClusterSummary {
  ClusterFeature feature = ClusterFeature::trees;
  std::vector<ClassSummary> classes;
  std::vector<double> merge_heights;
  Cost unclustered_cost = 0;
  bool operator==(const ClusterSummary&) const = default;
};

struct FlowRow {
  std::string village;
  std::string trader;
  Units trees = 0;
  std::int64_t distance_m = 0;
  bool operator==(const FlowRow&) const = default;
};

struct SiteRow {
  std::string id;
  std::string kind;  // village | trader
  double x = 0;
  double y = 0;
  bool operator==(const SiteRow&) const = default;
};

struct PermitRow {
  std::string trader;
  std::string village;
  Units trees = 0;
  bool operator==(const PermitRow&) const = default;
};

struct PriorityEntry {
  std::string village;
  Units optimal = 0;
  Units actual = 0;
  Units delta = 0;
  bool plant_priority = false;
  bool operator==(const PriorityEntry&) const = default;
};

struct TraderEntry {
  std::string trader;
  Units demand = 0;  // historical intake
  Units permit = 0;  // demand used by the solve (moderated when clustering)
  Units floor = 0;
  Units received = 0;
  bool operator==(const TraderEntry&) const = default;
};

struct ResultStats {
  std::string solver;
  std::int64_t augmentations = 0;
  std::int64_t cycles_canceled = 0;
  Units flow_value = 0;
  Cost cost = 0;
  bool certified = false;
  bool operator==(const ResultStats&) const = default;
};

struct ScenarioResult {
  std::optional<Cost> actual_cost;  // absent when a transacting pair is unreachable
  Cost optimized_cost = 0;
  Units total_supply = 0;
  Units total_demand = 0;
  Units shipped = 0;
  std::int64_t historical_pairs = 0;
  std::int64_t optimized_pairs = 0;
  std::vector<FlowRow> flows;
  std::vector<FlowRow> historical_flows;  // distance_m is -1 for unreachable pairs
  std::vector<SiteRow> sites;
  std::vector<PermitRow> permits;
  std::vector<PriorityEntry> priorities;
  std::vector<TraderEntry> traders;
  std::optional<ClusterSummary> clustering;
  std::vector<SurvivalCurve> curves;
  ResultStats stats;
  std::vector<Warning> warnings;

  std::optional<double> cost_ratio() const;  // optimized / actual
  bool operator==(const ScenarioResult&) const = default;
};

using ProgressFn = std::function<void(std::string_view stage)>;

// Runs on an already loaded dataset (its OD matrix must reflect cfg's load options).
ScenarioResult run_scenario(const Dataset& ds, const ScenarioConfig& cfg, const ProgressFn& progress = {});

// Loads the dataset with cfg's options ("od-matrix" stage), then runs.
ScenarioResult run_scenario(const DatasetFiles& files, const std::string& name, const ScenarioConfig& cfg,
                            const ProgressFn& progress = {}, int threads = 1);

struct SynthParams {
  int villages = 304;
  int traders = 154;
  int farms = 5911;
  int transactions = 9481;
  double extent_m = 60000;          // side of the district square
  double grid_spacing_m = 2000;     // fine road grid
  double external_share = 0.2;      // traders outside the district, reached by coarse roads
  double decay_m = 20000;           // distance-decay scale of historical trader choice
  double noise = 1.0;               // lognormal sigma on trader attractiveness
  std::uint64_t seed = 1;
};

struct SynthOutput {
  DatasetFiles files;
  YieldTable true_yields;
  std::string yields_truth_csv;
};

SynthOutput synth_instance(const SynthParams& params);

// Writes the dataset files plus yields_truth.csv into dir.
void write_synth(const std::filesystem::path& dir, const SynthOutput& out);

}  // namespace timberflow
