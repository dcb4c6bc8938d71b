#include "timberflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "timberflow/checked.hpp"
#include "timberflow/error.hpp"

namespace timberflow {

using nlohmann::json;

std::string to_string(SupplyMode mode) { return mode == SupplyMode::potential ? "potential" : "historical"; }
std::string to_string(ClusterFeature feature) { return feature == ClusterFeature::trees ? "trees" : "volume"; }
std::string to_string(HistoricalCost mode) { return mode == HistoricalCost::trees ? "trees" : "transactions"; }

void validate_config(const ScenarioConfig& cfg) {
  if (!(cfg.supply_scale > 0 && cfg.supply_scale <= 1)) throw InputError("supply_scale: must be in (0, 1]");
  if (share_ppm(cfg.supply_scale) == 0) throw InputError("supply_scale: must be at least 0.000001");
  if (cfg.trader_floor < 0) throw InputError("trader_floor: must be >= 0");
  if (cfg.market_power_threshold < 0) throw InputError("market_power_threshold: must be >= 0");
  if (!(cfg.merge_tolerance_m >= 0) || !std::isfinite(cfg.merge_tolerance_m)) {
    throw InputError("merge_tolerance_m: must be a finite number >= 0");
  }
  if (cfg.max_unreachable_pairs < -1) throw InputError("max_unreachable_pairs: must be >= -1");
}

namespace {

template <typename T>
T field(const json& j, const std::string& source, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw InputError(source + ": " + name + ": wrong type");
  }
}

std::int64_t integer_field(const json& j, const std::string& source, const char* name) {
  const json& v = j.at(name);
  if (!v.is_number_integer()) throw InputError(source + ": " + name + ": must be an integer");
  return v.get<std::int64_t>();
}

template <typename E>
E enum_field(const json& j, const std::string& source, const char* name,
             std::initializer_list<std::pair<const char*, E>> options) {
  const std::string s = field<std::string>(j, source, name);
  std::string allowed;
  for (const auto& [text, value] : options) {
    if (s == text) return value;
    allowed += allowed.empty() ? text : std::string(" | ") + text;
  }
  throw InputError(source + ": " + name + ": expected " + allowed + ", got '" + s + "'");
}

}  // namespace

ScenarioConfig parse_scenario_config(std::string_view json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(source + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw InputError(source + ": config must be a JSON object");
  static const std::set<std::string> known{"supply_scale",           "trader_floor",     "clustering",
                                           "supply_mode",            "solver",           "seed",
                                           "market_power_threshold", "cluster_feature",  "historical_cost",
                                           "include_snap_offsets",   "merge_tolerance_m", "max_unreachable_pairs",
                                           "dataset"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw InputError(source + ": unknown field '" + key + "'");
  }
  ScenarioConfig cfg;
  if (j.contains("supply_scale")) {
    if (!j["supply_scale"].is_number()) throw InputError(source + ": supply_scale: must be a number");
    cfg.supply_scale = j["supply_scale"].get<double>();
  }
  if (j.contains("trader_floor")) cfg.trader_floor = integer_field(j, source, "trader_floor");
  if (j.contains("clustering")) cfg.clustering = field<bool>(j, source, "clustering");
  if (j.contains("supply_mode")) {
    cfg.supply_mode = enum_field<SupplyMode>(j, source, "supply_mode",
                                             {{"potential", SupplyMode::potential}, {"historical", SupplyMode::historical}});
  }
  if (j.contains("solver")) {
    cfg.solver = enum_field<SolverKind>(j, source, "solver",
                                        {{"cycle-canceling", SolverKind::cycle_canceling},
                                         {"successive-shortest-paths", SolverKind::successive_shortest_paths}});
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw InputError(source + ": seed: must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("market_power_threshold")) {
    cfg.market_power_threshold = integer_field(j, source, "market_power_threshold");
  }
  if (j.contains("cluster_feature")) {
    cfg.cluster_feature = enum_field<ClusterFeature>(
        j, source, "cluster_feature", {{"trees", ClusterFeature::trees}, {"volume", ClusterFeature::volume}});
  }
  if (j.contains("historical_cost")) {
    cfg.historical_cost = enum_field<HistoricalCost>(
        j, source, "historical_cost",
        {{"trees", HistoricalCost::trees}, {"transactions", HistoricalCost::transactions}});
  }
  if (j.contains("include_snap_offsets")) cfg.include_snap_offsets = field<bool>(j, source, "include_snap_offsets");
  if (j.contains("merge_tolerance_m")) {
    if (!j["merge_tolerance_m"].is_number()) throw InputError(source + ": merge_tolerance_m: must be a number");
    cfg.merge_tolerance_m = j["merge_tolerance_m"].get<double>();
  }
  if (j.contains("max_unreachable_pairs")) {
    cfg.max_unreachable_pairs = integer_field(j, source, "max_unreachable_pairs");
  }
  if (j.contains("dataset")) cfg.dataset = field<std::string>(j, source, "dataset");
  try {
    validate_config(cfg);
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
  return cfg;
}

std::string scenario_config_json(const ScenarioConfig& cfg) {
  json j;
  j["supply_scale"] = cfg.supply_scale;
  j["trader_floor"] = cfg.trader_floor;
  j["clustering"] = cfg.clustering;
  j["supply_mode"] = to_string(cfg.supply_mode);
  j["solver"] = to_string(cfg.solver);
  j["seed"] = cfg.seed;
  j["market_power_threshold"] = cfg.market_power_threshold;
  j["cluster_feature"] = to_string(cfg.cluster_feature);
  j["historical_cost"] = to_string(cfg.historical_cost);
  j["include_snap_offsets"] = cfg.include_snap_offsets;
  j["merge_tolerance_m"] = cfg.merge_tolerance_m;
  j["max_unreachable_pairs"] = cfg.max_unreachable_pairs;
  return j.dump();
}

LoadOptions load_options(const ScenarioConfig& cfg, int threads) {
  LoadOptions o;
  o.threads = threads;
  o.include_snap_offsets = cfg.include_snap_offsets;
  o.merge_tolerance_m = cfg.merge_tolerance_m;
  o.cache_dir = default_cache_dir();
  return o;
}

std::int64_t share_ppm(double share) { return std::llround(share * 1e6); }

Units scale_supply(Units supply, std::int64_t ppm) {
  return static_cast<Units>(static_cast<__int128>(supply) * ppm / 1'000'000);
}

std::vector<Units> apply_supply_reduction(const std::vector<Units>& supplies, double share) {
  if (!(share > 0 && share <= 1)) throw InputError("supply share must be in (0, 1]");
  const std::int64_t ppm = share_ppm(share);
  std::vector<Units> out;
  out.reserve(supplies.size());
  for (Units s : supplies) out.push_back(scale_supply(s, ppm));
  return out;
}

std::vector<Units> apply_trader_floor(const std::vector<Units>& demands, Units floor,
                                      const std::vector<Units>& supplies) {
  if (floor < 0) throw InputError("trader floor must be >= 0");
  std::vector<Units> out;
  Units required = 0;
  for (Units d : demands) {
    out.push_back(std::min(floor, d));
    required = checked_add(required, out.back());
  }
  const Units available = std::accumulate(supplies.begin(), supplies.end(), Units{0});
  if (required > available) {
    throw InfeasibleError("trader floors need " + std::to_string(required) + " trees (" +
                              std::to_string(demands.size()) + " traders x min(" + std::to_string(floor) +
                              ", demand)) but total supply is " + std::to_string(available),
                          required, available);
  }
  return out;
}

SurvivalCurve survival_function(std::vector<Units> values, std::string name) {
  if (values.empty()) throw InputError("survival function of an empty sample");
  std::sort(values.begin(), values.end());
  SurvivalCurve c;
  c.name = std::move(name);
  c.observations = static_cast<Units>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == 0 || values[i] != values[i - 1]) {
      c.points.push_back({values[i], static_cast<Units>(values.size() - i)});
    }
  }
  return c;
}

std::optional<double> ScenarioResult::cost_ratio() const {
  if (!actual_cost || *actual_cost <= 0) return std::nullopt;
  return static_cast<double>(optimized_cost) / static_cast<double>(*actual_cost);
}

namespace {

void stage(const ProgressFn& progress, std::string_view name) {
  if (progress) progress(name);
}

std::string join_ids(const std::vector<std::string>& ids, std::size_t limit) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > limit) out += ", ...";
  return out;
}

MarketSolution solve_with_floors(const std::vector<Units>& supplies, const std::vector<Units>& demands,
                                 const ODMatrix& od, const ScenarioConfig& cfg, std::vector<Units>& floors) {
  floors.assign(demands.size(), 0);
  if (cfg.trader_floor > 0) floors = apply_trader_floor(demands, cfg.trader_floor, supplies);
  return solve_market(supplies, demands, od, cfg.solver, floors);
}

}  // namespace

ScenarioResult run_scenario(const Dataset& ds, const ScenarioConfig& cfg, const ProgressFn& progress) {
  validate_config(cfg);
  const MarketInstance& inst = ds.instance;
  ScenarioResult r;

  if (cfg.max_unreachable_pairs >= 0 && static_cast<std::int64_t>(ds.unreachable.size()) > cfg.max_unreachable_pairs) {
    throw DomainError(std::to_string(ds.unreachable.size()) + " village-trader pairs are unreachable, limit is " +
                          std::to_string(cfg.max_unreachable_pairs),
                      "unreachable_pairs");
  }
  for (const auto& w : ds.warnings) r.warnings.push_back({"dataset", w});

  stage(progress, "solving");
  std::vector<Units> supply = supplies(inst, cfg.supply_mode);
  supply = apply_supply_reduction(supply, cfg.supply_scale);
  const std::vector<Units> demands = trader_demands(inst);
  std::vector<Units> solve_demands = demands;

  std::optional<ClusterModel> model;
  if (cfg.clustering) {
    model = cluster_traders(cluster_feature(inst, cfg.cluster_feature));
    solve_demands = moderate_demands(*model, demands).permits;
  }
  std::vector<Units> floors;
  const MarketSolution sol = solve_with_floors(supply, solve_demands, inst.od, cfg, floors);

  if (model) {
    std::vector<Units> base_floors;
    const MarketSolution base = solve_with_floors(supply, demands, inst.od, cfg, base_floors);
    ClusterSummary cs;
    cs.feature = cfg.cluster_feature;
    const std::vector<Units> feature = cluster_feature(inst, cfg.cluster_feature);
    for (const DemandClass& c : model->classes) {
      ClassSummary s;
      s.label = c.label;
      for (int t : c.members) {
        s.traders.push_back(inst.traders[t].id);
        s.demand_total += demands[t];
      }
      s.feature_total = c.total;
      cs.classes.push_back(std::move(s));
    }
    for (const WardMerge& m : model->merges) cs.merge_heights.push_back(m.height);
    cs.unclustered_cost = base.cost;
    r.clustering = std::move(cs);
  }

  stage(progress, "reporting");
  r.optimized_cost = sol.cost;
  r.total_supply = std::accumulate(supply.begin(), supply.end(), Units{0});
  r.total_demand = std::accumulate(solve_demands.begin(), solve_demands.end(), Units{0});
  r.shipped = sol.shipped;
  for (const PairFlow& p : sol.pairs) {
    r.flows.push_back({inst.villages[p.village].id, inst.traders[p.trader].id, p.trees,
                       inst.od.at(static_cast<std::size_t>(p.village), static_cast<std::size_t>(p.trader))});
  }
  for (const Permit& p : permit_schedule(sol)) {
    r.permits.push_back({inst.traders[p.trader].id, inst.villages[p.village].id, p.trees});
  }
  for (const PriorityRow& row : priority_villages(sol, inst)) {
    r.priorities.push_back(
        {inst.villages[row.village].id, row.optimal_trees, row.actual_trees, row.delta, row.plant_priority});
  }
  for (std::size_t t = 0; t < inst.traders.size(); ++t) {
    r.traders.push_back({inst.traders[t].id, demands[t], solve_demands[t], floors[t], sol.trader_received[t]});
  }

  std::map<std::pair<int, int>, Units> transacting;
  for (const auto& x : inst.transactions) transacting[{x.village, x.trader}] += x.trees;
  r.historical_pairs = static_cast<std::int64_t>(transacting.size());
  for (const auto& [pair, trees] : transacting) {
    r.historical_flows.push_back({inst.villages[pair.first].id, inst.traders[pair.second].id, trees,
                                  inst.od.at(static_cast<std::size_t>(pair.first), static_cast<std::size_t>(pair.second))});
  }
  for (const auto& v : inst.villages) r.sites.push_back({v.id, "village", v.position.x, v.position.y});
  for (const auto& t : inst.traders) r.sites.push_back({t.id, "trader", t.position.x, t.position.y});
  r.optimized_pairs = static_cast<std::int64_t>(sol.pairs.size());

  try {
    r.actual_cost = actual_flow_cost(inst, cfg.historical_cost).cost;
  } catch (const DomainError& e) {
    r.warnings.push_back({"historical_cost_unavailable", e.what()});
  }
  if (inst.transactions.empty()) r.warnings.push_back({"no_transactions", "dataset has no transactions"});

  auto add_curve = [&](std::vector<Units> values, const char* name) {
    if (!values.empty()) r.curves.push_back(survival_function(std::move(values), name));
  };
  add_curve(demands, "historical_trader_intake");
  add_curve(sol.trader_received, "optimized_trader_intake");
  std::vector<Units> txn_trees, flow_trees;
  for (const auto& x : inst.transactions) txn_trees.push_back(x.trees);
  for (const auto& p : sol.pairs) flow_trees.push_back(p.trees);
  add_curve(txn_trees, "historical_transactions");
  add_curve(flow_trees, "optimized_flows");

  r.stats.solver = to_string(cfg.solver);
  r.stats.augmentations = sol.raw.stats.augmentations;
  r.stats.cycles_canceled = sol.raw.stats.cycles_canceled;
  r.stats.flow_value = sol.shipped;
  r.stats.cost = sol.cost;
  r.stats.certified = !optimality_certificate(sol.raw);

  for (std::size_t t = 0; t < inst.traders.size(); ++t) {
    const Units unmet = solve_demands[t] - sol.trader_received[t];
    if (unmet > 0) {
      r.warnings.push_back({"shortfall", "trader " + inst.traders[t].id + ": received " +
                                             std::to_string(sol.trader_received[t]) + " of " +
                                             std::to_string(solve_demands[t]) + " (unmet " + std::to_string(unmet) +
                                             ")"});
    }
  }
  std::vector<std::string> powerful;
  for (std::size_t t = 0; t < inst.traders.size(); ++t) {
    if (demands[t] > cfg.market_power_threshold) powerful.push_back(inst.traders[t].id);
  }
  if (!powerful.empty()) {
    r.warnings.push_back({"market_power", std::to_string(powerful.size()) + " traders handled more than " +
                                              std::to_string(cfg.market_power_threshold) +
                                              " trees: " + join_ids(powerful, 20)});
  }
  return r;
}

ScenarioResult run_scenario(const DatasetFiles& files, const std::string& name, const ScenarioConfig& cfg,
                            const ProgressFn& progress, int threads) {
  validate_config(cfg);
  stage(progress, "od-matrix");
  const Dataset ds = parse_dataset(files, name, load_options(cfg, threads));
  return run_scenario(ds, cfg, progress);
}

}  // namespace timberflow
