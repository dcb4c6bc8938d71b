#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "timberflow/flow_network.hpp"
#include "timberflow/road_graph.hpp"
#include "timberflow/solver.hpp"

namespace timberflow {

struct Farm {
  std::string id;
  int village = -1;
  std::string land_use;
  double area_ha = 0;
};

struct Village {
  std::string id;
  Point position;
  std::vector<int> farms;
};

struct Trader {
  std::string id;
  Point position;
};

struct Transaction {
  std::string id;
  int village = -1;
  int trader = -1;
  Units trees = 0;
  std::optional<Units> uprooted;
  std::optional<double> volume_m3;
  std::optional<int> farm;  // present when the dataset attributes harvests to farms
};

// Land-use type -> mean trees per hectare.
using YieldTable = std::map<std::string, double>;

struct MarketInstance {
  std::vector<Village> villages;
  std::vector<Farm> farms;
  std::vector<Trader> traders;
  std::vector<Transaction> transactions;
  std::optional<YieldTable> yield_override;
  ODMatrix od;  // rows follow villages, columns follow traders

  std::optional<int> village_index(const std::string& id) const;
  std::optional<int> trader_index(const std::string& id) const;
  void reindex();

 private:
  std::unordered_map<std::string, int> village_by_id_;
  std::unordered_map<std::string, int> trader_by_id_;
};

// Mean over farms of (trees harvested from the farm / farm area), per land
// use. Farms without recorded harvest count as 0. Needs farm attribution.
YieldTable compute_yield_table(const std::vector<Farm>& farms, const std::vector<Transaction>& transactions);

// The override when the dataset ships one, else compute_yield_table.
YieldTable effective_yields(const MarketInstance& inst);

// floor(sum over member farms of yield(land use) * area).
Units village_supply(const Village& village, const std::vector<Farm>& farms, const YieldTable& yields);

Units trader_demand(int trader, const std::vector<Transaction>& transactions);

enum class SupplyMode { potential, historical };

std::vector<Units> potential_supplies(const MarketInstance& inst);
std::vector<Units> historical_supplies(const MarketInstance& inst);
std::vector<Units> supplies(const MarketInstance& inst, SupplyMode mode);
std::vector<Units> trader_demands(const MarketInstance& inst);

struct PairFlow {
  int village = -1;
  int trader = -1;
  Units trees = 0;
  bool operator==(const PairFlow&) const = default;
};

// How the historical cost is priced: distance x trees (the flow cost at the
// historical flow) or distance x number of transactions.
enum class HistoricalCost { trees, transactions };

struct ActualCost {
  std::vector<PairFlow> pairs;  // aggregated village -> trader totals
  Cost cost = 0;                // tree-metres
};

// Throws DomainError when a transacting pair has no road connection.
ActualCost actual_flow_cost(const MarketInstance& inst, HistoricalCost mode = HistoricalCost::trees);

struct MarketNetwork {
  FlowNetwork network;
  int village_count = 0;
  int trader_count = 0;
  int collector = -1;  // extra sink node, only when floors are present
  struct PairEdge {
    int village;
    int trader;
    int edge;
  };
  std::vector<PairEdge> pair_edges;   // village-major
  std::vector<int> trader_sink_edges;  // trader -> collector, when collector >= 0

  int village_node(int v) const { return v; }
  int trader_node(int t) const { return village_count + t; }
};

// Villages +b_v, traders -b_t, one edge per reachable pair with cost =
// distance in metres and capacity min(b_v, b_t). With nonzero floors every
// trader instead drains into a collector node through an edge with lower
// bound floor_t and capacity b_t, and the collector carries -sum b_t.
MarketNetwork build_market_network(const std::vector<Units>& supplies, const std::vector<Units>& demands,
                                   const ODMatrix& od, const std::vector<Units>& floors = {});

struct MarketSolution {
  std::vector<PairFlow> pairs;  // positive flows only, village-major
  Cost cost = 0;                // tree-metres
  Units shipped = 0;
  std::vector<Units> village_shipped;
  std::vector<Units> trader_received;
  MarketNetwork network;
  MinCostFlowResult raw;
};

MarketSolution solve_market(const std::vector<Units>& supplies, const std::vector<Units>& demands, const ODMatrix& od,
                            SolverKind solver = SolverKind::cycle_canceling, const std::vector<Units>& floors = {});

struct OptimizeOptions {
  SolverKind solver = SolverKind::cycle_canceling;
  SupplyMode supply_mode = SupplyMode::potential;
};

MarketSolution optimize_market(const MarketInstance& inst, const OptimizeOptions& options = {});

struct Permit {
  int trader = -1;
  int village = -1;
  Units trees = 0;
  bool operator==(const Permit&) const = default;
};

// One permit per positive flow, ordered by trader then village.
std::vector<Permit> permit_schedule(const MarketSolution& solution);

struct PriorityRow {
  int village = -1;
  Units optimal_trees = 0;
  Units actual_trees = 0;
  Units delta = 0;
  bool plant_priority = false;
};

// optimal - actual per village. Uprooting is taken as uniform across
// villages, so no uprooting correction is applied.
std::vector<PriorityRow> priority_villages(const MarketSolution& solution, const MarketInstance& inst);

// Volume per trader in litres (m3 * 1000, rounded); InputError when any
// transaction lacks a volume.
std::vector<Units> trader_volumes_litres(const MarketInstance& inst);

}  // namespace timberflow
