#include "timberflow/market.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "timberflow/checked.hpp"
#include "timberflow/error.hpp"

namespace timberflow {

std::optional<int> MarketInstance::village_index(const std::string& id) const {
  auto it = village_by_id_.find(id);
  if (it == village_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> MarketInstance::trader_index(const std::string& id) const {
  auto it = trader_by_id_.find(id);
  if (it == trader_by_id_.end()) return std::nullopt;
  return it->second;
}

void MarketInstance::reindex() {
  village_by_id_.clear();
  trader_by_id_.clear();
  for (std::size_t i = 0; i < villages.size(); ++i) village_by_id_.emplace(villages[i].id, static_cast<int>(i));
  for (std::size_t i = 0; i < traders.size(); ++i) trader_by_id_.emplace(traders[i].id, static_cast<int>(i));
}

YieldTable compute_yield_table(const std::vector<Farm>& farms, const std::vector<Transaction>& transactions) {
  std::vector<Units> harvested(farms.size(), 0);
  bool attributed = false;
  for (const Transaction& t : transactions) {
    if (!t.farm) continue;
    attributed = true;
    harvested.at(static_cast<std::size_t>(*t.farm)) += t.trees;
  }
  if (!attributed && !transactions.empty()) {
    throw InputError("transactions carry no farm_id; supply yields.csv to define per-hectare yields");
  }
  std::map<std::string, std::pair<double, int>> sums;
  for (std::size_t i = 0; i < farms.size(); ++i) {
    if (!(farms[i].area_ha > 0)) throw InputError("farm " + farms[i].id + " has non-positive area");
    auto& [sum, count] = sums[farms[i].land_use];
    sum += static_cast<double>(harvested[i]) / farms[i].area_ha;
    ++count;
  }
  YieldTable table;
  for (const auto& [type, acc] : sums) table[type] = acc.first / acc.second;
  return table;
}

YieldTable effective_yields(const MarketInstance& inst) {
  return inst.yield_override ? *inst.yield_override : compute_yield_table(inst.farms, inst.transactions);
}

Units village_supply(const Village& village, const std::vector<Farm>& farms, const YieldTable& yields) {
  double total = 0;
  for (int f : village.farms) {
    const Farm& farm = farms.at(static_cast<std::size_t>(f));
    auto it = yields.find(farm.land_use);
    if (it == yields.end()) {
      throw InputError("no yield for land use '" + farm.land_use + "' (farm " + farm.id + ")");
    }
    total += it->second * farm.area_ha;
  }
  // Guard against sums like 29.999999999 from decimal areas.
  return static_cast<Units>(std::floor(total + 1e-9 * std::max(1.0, total)));
}

Units trader_demand(int trader, const std::vector<Transaction>& transactions) {
  Units total = 0;
  for (const Transaction& t : transactions) {
    if (t.trader == trader) total = checked_add(total, t.trees);
  }
  return total;
}

std::vector<Units> potential_supplies(const MarketInstance& inst) {
  const YieldTable yields = effective_yields(inst);
  std::vector<Units> out;
  out.reserve(inst.villages.size());
  for (const Village& v : inst.villages) out.push_back(village_supply(v, inst.farms, yields));
  return out;
}

std::vector<Units> historical_supplies(const MarketInstance& inst) {
  std::vector<Units> out(inst.villages.size(), 0);
  for (const Transaction& t : inst.transactions) out[t.village] = checked_add(out[t.village], t.trees);
  return out;
}

std::vector<Units> supplies(const MarketInstance& inst, SupplyMode mode) {
  return mode == SupplyMode::potential ? potential_supplies(inst) : historical_supplies(inst);
}

std::vector<Units> trader_demands(const MarketInstance& inst) {
  std::vector<Units> out(inst.traders.size(), 0);
  for (const Transaction& t : inst.transactions) out[t.trader] = checked_add(out[t.trader], t.trees);
  return out;
}

ActualCost actual_flow_cost(const MarketInstance& inst, HistoricalCost mode) {
  std::map<std::pair<int, int>, std::pair<Units, Units>> totals;  // trees, transaction count
  for (const Transaction& t : inst.transactions) {
    auto& [trees, count] = totals[{t.village, t.trader}];
    trees = checked_add(trees, t.trees);
    ++count;
  }
  ActualCost out;
  for (const auto& [key, amounts] : totals) {
    const auto [v, t] = key;
    const std::int64_t d = inst.od.at(static_cast<std::size_t>(v), static_cast<std::size_t>(t));
    if (d == ODMatrix::kUnreachable) {
      throw DomainError("village " + inst.villages[v].id + " and trader " + inst.traders[t].id +
                            " transact but have no road connection",
                        "unreachable_pair");
    }
    out.pairs.push_back({v, t, amounts.first});
    const Units weight = mode == HistoricalCost::trees ? amounts.first : amounts.second;
    out.cost = checked_add(out.cost, checked_mul(d, weight));
  }
  return out;
}

MarketNetwork build_market_network(const std::vector<Units>& supplies, const std::vector<Units>& demands,
                                   const ODMatrix& od, const std::vector<Units>& floors) {
  if (od.origins.size() != supplies.size() || od.destinations.size() != demands.size()) {
    throw InputError("OD matrix dimensions do not match villages x traders");
  }
  if (!floors.empty() && floors.size() != demands.size()) throw InputError("one floor per trader expected");
  const bool with_floors = std::any_of(floors.begin(), floors.end(), [](Units f) { return f > 0; });

  MarketNetwork m;
  m.village_count = static_cast<int>(supplies.size());
  m.trader_count = static_cast<int>(demands.size());
  m.network = FlowNetwork(m.village_count + m.trader_count + (with_floors ? 1 : 0));
  for (int v = 0; v < m.village_count; ++v) {
    if (supplies[v] < 0) throw InputError("negative supply");
    m.network.set_balance(m.village_node(v), supplies[v]);
  }
  Units total_demand = 0;
  for (int t = 0; t < m.trader_count; ++t) {
    if (demands[t] < 0) throw InputError("negative demand");
    total_demand = checked_add(total_demand, demands[t]);
    if (!with_floors) m.network.set_balance(m.trader_node(t), -demands[t]);
  }
  m.pair_edges.reserve(static_cast<std::size_t>(m.village_count) * m.trader_count);
  for (int v = 0; v < m.village_count; ++v) {
    for (int t = 0; t < m.trader_count; ++t) {
      const std::int64_t d = od.at(static_cast<std::size_t>(v), static_cast<std::size_t>(t));
      if (d == ODMatrix::kUnreachable) continue;
      const int e = m.network.add_edge(m.village_node(v), m.trader_node(t), std::min(supplies[v], demands[t]), d);
      m.pair_edges.push_back({v, t, e});
    }
  }
  if (with_floors) {
    m.collector = m.village_count + m.trader_count;
    m.network.set_balance(m.collector, -total_demand);
    for (int t = 0; t < m.trader_count; ++t) {
      const Units lb = std::min(std::max<Units>(floors[t], 0), demands[t]);
      m.trader_sink_edges.push_back(m.network.add_edge(m.trader_node(t), m.collector, demands[t], 0, lb));
    }
  }
  return m;
}

MarketSolution solve_market(const std::vector<Units>& supplies, const std::vector<Units>& demands, const ODMatrix& od,
                            SolverKind solver, const std::vector<Units>& floors) {
  MarketSolution s;
  s.network = build_market_network(supplies, demands, od, floors);
  s.raw = solve(s.network.network, solver);
  s.village_shipped.assign(supplies.size(), 0);
  s.trader_received.assign(demands.size(), 0);
  for (const auto& pe : s.network.pair_edges) {
    const Units x = s.raw.flow[pe.edge];
    if (x <= 0) continue;
    s.pairs.push_back({pe.village, pe.trader, x});
    s.village_shipped[pe.village] += x;
    s.trader_received[pe.trader] += x;
    s.shipped += x;
  }
  s.cost = s.raw.cost;
  return s;
}

MarketSolution optimize_market(const MarketInstance& inst, const OptimizeOptions& options) {
  return solve_market(supplies(inst, options.supply_mode), trader_demands(inst), inst.od, options.solver);
}

std::vector<Permit> permit_schedule(const MarketSolution& solution) {
  std::vector<Permit> out;
  out.reserve(solution.pairs.size());
  for (const PairFlow& p : solution.pairs) out.push_back({p.trader, p.village, p.trees});
  std::sort(out.begin(), out.end(), [](const Permit& a, const Permit& b) {
    return a.trader != b.trader ? a.trader < b.trader : a.village < b.village;
  });
  return out;
}

std::vector<PriorityRow> priority_villages(const MarketSolution& solution, const MarketInstance& inst) {
  const std::vector<Units> actual = historical_supplies(inst);
  std::vector<PriorityRow> rows;
  rows.reserve(inst.villages.size());
  for (std::size_t v = 0; v < inst.villages.size(); ++v) {
    PriorityRow row;
    row.village = static_cast<int>(v);
    row.optimal_trees = solution.village_shipped.at(v);
    row.actual_trees = actual[v];
    row.delta = row.optimal_trees - row.actual_trees;
    row.plant_priority = row.delta > 0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<Units> trader_volumes_litres(const MarketInstance& inst) {
  std::vector<Units> out(inst.traders.size(), 0);
  for (const Transaction& t : inst.transactions) {
    if (!t.volume_m3) throw InputError("transaction " + t.id + " has no volume_m3; cannot cluster by volume");
    out[t.trader] += std::llround(*t.volume_m3 * 1000.0);
  }
  return out;
}

}  // namespace timberflow
