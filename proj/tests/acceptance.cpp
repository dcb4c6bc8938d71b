// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "road_oracles.hpp"
#include "test_support.hpp"
#include "timberflow/cli.hpp"
#include "timberflow/clustering.hpp"
#include "timberflow/csv.hpp"
#include "timberflow/error.hpp"
#include "timberflow/report.hpp"
#include "timberflow/scenario.hpp"

using namespace timberflow;
using Clock = std::chrono::steady_clock;

namespace {

const std::filesystem::path kFixtures = TIMBERFLOW_FIXTURES;
const std::filesystem::path kGolden = TIMBERFLOW_GOLDEN;

// Solver outputs collected from every criterion, re-checked for criteria 2 and 3.
std::vector<std::pair<FlowNetwork, MinCostFlowResult>> g_solved;

MinCostFlowResult keep(const FlowNetwork& net, MinCostFlowResult r) {
  g_solved.emplace_back(net, r);
  return r;
}

struct Verdict {
  bool ok = true;
  std::string detail;
  int failures = 0;

  void expect(bool cond, const std::string& what) {
    if (cond) return;
    if (failures++ < 3) detail += (detail.empty() ? "" : "; ") + what;
    ok = false;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string secs(double s) { return format_fixed(s, 2) + " s"; }

// 1. cycle canceling = successive shortest paths = brute force, exactly.
Verdict oracle_equivalence() {
  Verdict v;
  std::mt19937_64 rng(20240101);
  const auto t0 = Clock::now();
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    const auto inst = testing::random_bipartite(rng, 4, 3, 6, 10);
    const auto cc = keep(inst.net, min_cost_flow(inst.net));
    const auto ssp = keep(inst.net, successive_shortest_paths(inst.net));
    const auto brute = brute_force_min_cost(inst.net);
    v.expect(brute.has_value(), "brute force found no flow on instance " + std::to_string(i));
    if (!brute) continue;
    v.expect(cc.cost == brute->cost && ssp.cost == brute->cost,
             "instance " + std::to_string(i) + ": " + std::to_string(cc.cost) + "/" + std::to_string(ssp.cost) + "/" +
                 std::to_string(brute->cost));
    v.expect(cc.value == brute->value && ssp.value == brute->value, "flow value mismatch on " + std::to_string(i));
  }
  const double t = seconds_since(t0);
  v.expect(t < 60, "took " + secs(t));
  if (v.ok) v.detail = std::to_string(n) + " instances, 3 routes agree exactly, " + secs(t);
  return v;
}

// 3a. lower_bound_transform round trip on small random networks.
void lower_bound_round_trip(Verdict& v) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 400; ++i) {
    const auto r = testing::random_feasible(rng, 6, 10, 5, 10);
    const LowerBoundTransform lt = lower_bound_transform(r.net);
    Flow shifted = r.flow;
    for (int e = 0; e < r.net.edge_count(); ++e) shifted.values[e] -= r.net.edge(e).lower_bound;
    v.expect(validate_flow(lt.network, shifted).ok(), "shifted flow infeasible on network " + std::to_string(i));
    v.expect(flow_cost(lt.network, shifted) + lt.offset_cost == flow_cost(r.net, r.flow),
             "cost not preserved on network " + std::to_string(i));
    v.expect(restore_lower_bounds(r.net, shifted) == r.flow, "restore mismatch on network " + std::to_string(i));
    // Solving with bounds must respect them too.
    const auto sol = keep(r.net, min_cost_flow(r.net));
    for (int e = 0; e < r.net.edge_count(); ++e) {
      v.expect(sol.flow[e] >= r.net.edge(e).lower_bound, "lower bound violated by solver");
    }
  }
}

// Random market with the village-major OD layout used by the market model.
struct RandomMarket {
  std::vector<Units> supplies, demands;
  ODMatrix od;
};

RandomMarket random_market(std::mt19937_64& rng, int max_v, int max_t, Units max_amount, std::int64_t max_d) {
  RandomMarket m;
  const int nv = static_cast<int>(testing::uniform(rng, 1, max_v));
  const int nt = static_cast<int>(testing::uniform(rng, 1, max_t));
  for (int i = 0; i < nv; ++i) {
    m.supplies.push_back(testing::uniform(rng, 0, max_amount));
    m.od.origins.push_back("v" + std::to_string(i));
  }
  for (int j = 0; j < nt; ++j) {
    m.demands.push_back(testing::uniform(rng, 0, max_amount));
    m.od.destinations.push_back("t" + std::to_string(j));
  }
  for (int k = 0; k < nv * nt; ++k) m.od.distances_m.push_back(testing::uniform(rng, 0, max_d));
  return m;
}

// 3. validate_flow empty for every returned flow; floors honoured; round trip.
Verdict feasibility() {
  Verdict v;
  lower_bound_round_trip(v);
  std::mt19937_64 rng(31337);
  int floored = 0;
  for (int i = 0; i < 300; ++i) {
    const auto m = random_market(rng, 5, 4, 20, 50);
    const Units supply = std::accumulate(m.supplies.begin(), m.supplies.end(), Units{0});
    const Units floor = testing::uniform(rng, 1, 6);
    std::vector<Units> floors;
    try {
      floors = apply_trader_floor(m.demands, floor, m.supplies);
    } catch (const InfeasibleError& e) {
      v.expect(e.required() > supply, "floors rejected although they fit");
      continue;
    }
    ++floored;
    const SolverKind kind = i % 2 ? SolverKind::cycle_canceling : SolverKind::successive_shortest_paths;
    const MarketSolution sol = solve_market(m.supplies, m.demands, m.od, kind, floors);
    keep(sol.network.network, sol.raw);
    for (std::size_t t = 0; t < m.demands.size(); ++t) {
      v.expect(sol.trader_received[t] >= floors[t], "trader below floor in instance " + std::to_string(i));
    }
  }
  std::int64_t checked = 0;
  for (const auto& [net, r] : g_solved) {
    v.expect(validate_flow(net, r.flow, BalanceRule::up_to).ok(), "returned flow violates the input network");
    v.expect(validate_flow(r.st.with_flow_value(r.value), r.st_flow).ok(), "s-t flow does not conserve");
    v.expect(flow_cost(net, r.flow) == r.cost, "reported cost differs from flow cost");
    ++checked;
  }
  if (v.ok) {
    v.detail = std::to_string(checked) + " returned flows valid, " + std::to_string(floored) +
               " floored markets honour floors, 400 bound round trips exact";
  }
  return v;
}

// 4. shipped = min(total supply, total demand); full demand when supply suffices.
Verdict max_flow_law() {
  Verdict v;
  std::mt19937_64 rng(4242);
  int covered = 0;
  for (int i = 0; i < 400; ++i) {
    const auto m = random_market(rng, 8, 6, 50, 1000);
    const Units supply = std::accumulate(m.supplies.begin(), m.supplies.end(), Units{0});
    const Units demand = std::accumulate(m.demands.begin(), m.demands.end(), Units{0});
    for (SolverKind kind : {SolverKind::cycle_canceling, SolverKind::successive_shortest_paths}) {
      const MarketSolution sol = solve_market(m.supplies, m.demands, m.od, kind);
      keep(sol.network.network, sol.raw);
      v.expect(sol.shipped == std::min(supply, demand), "shipped " + std::to_string(sol.shipped) + " on instance " +
                                                            std::to_string(i));
      if (supply >= demand) {
        for (std::size_t t = 0; t < m.demands.size(); ++t) {
          v.expect(sol.trader_received[t] == m.demands[t], "trader short although supply suffices");
        }
      }
    }
    covered += supply >= demand;
  }
  if (v.ok) v.detail = "400 markets x 2 solvers (" + std::to_string(covered) + " with supply >= demand)";
  return v;
}

// 5. Dijkstra OD matrix = Floyd-Warshall; symmetry and triangle inequality.
Verdict shortest_paths() {
  Verdict v;
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> coord(0, 5000);
  int graphs = 0;
  for (int i = 0; i < 60; ++i) {
    const int n = static_cast<int>(testing::uniform(rng, 2, 50));
    const RoadGraph g = testing::random_road_graph(rng, n, 5000, i % 3 == 0 ? 0.3 : 0.0);
    const auto fw = testing::floyd_warshall(g);
    std::vector<Site> vs, ts;
    for (int k = 0; k < 6; ++k) vs.push_back({"v" + std::to_string(k), {coord(rng), coord(rng)}});
    for (int k = 0; k < 5; ++k) ts.push_back({"t" + std::to_string(k), {coord(rng), coord(rng)}});
    const ODResult od = od_cost_matrix(vs, ts, g, 1 + i % 3);
    for (std::size_t a = 0; a < vs.size(); ++a) {
      for (std::size_t b = 0; b < ts.size(); ++b) {
        const std::int64_t mm = fw[od.origin_snaps[a].node][od.destination_snaps[b].node];
        const std::int64_t want = mm == kUnreachableMm ? ODMatrix::kUnreachable : (mm + 500) / 1000;
        v.expect(od.matrix.at(a, b) == want, "OD entry differs from Floyd-Warshall");
      }
    }
    for (int s = 0; s < g.node_count(); ++s) {
      v.expect(shortest_paths_from(s, g) == fw[s], "Dijkstra row differs from Floyd-Warshall");
    }
    ++graphs;
  }

  const SynthOutput out = synth_instance({});
  const RoadGraph fine = parse_road_graph(out.files.at("roads.csv"), "roads.csv");
  const RoadGraph coarse = parse_road_graph(out.files.at("roads_coarse.csv"), "roads_coarse.csv", fine.projection);
  const RoadGraph g = merge_road_graphs(fine, coarse);
  std::map<int, std::vector<std::int64_t>> rows;
  auto row = [&](int s) -> const std::vector<std::int64_t>& {
    auto it = rows.find(s);
    if (it == rows.end()) it = rows.emplace(s, shortest_paths_from(s, g)).first;
    return it->second;
  };
  std::uniform_int_distribution<int> node(0, g.node_count() - 1);
  for (int k = 0; k < 1000; ++k) {
    const int a = node(rng), b = node(rng), c = node(rng);
    v.expect(row(a)[b] == row(b)[a], "asymmetric distance");
    if (row(a)[b] >= 0 && row(b)[c] >= 0) {
      v.expect(row(a)[c] >= 0 && row(a)[c] <= row(a)[b] + row(b)[c], "triangle inequality violated");
    }
  }
  if (v.ok) {
    v.detail = std::to_string(graphs) + " graphs <= 50 nodes match Floyd-Warshall; 1000 pairs/triples on the " +
               std::to_string(g.node_count()) + "-node synthetic network";
  }
  return v;
}

// 6. Full-scale synthetic instance: three scenarios inside five minutes.
Verdict full_scale(std::vector<Units>& demands_out) {
  Verdict v;
  const auto t0 = Clock::now();
  const SynthOutput out = synth_instance({});
  const Dataset ds = parse_dataset(out.files, "synthetic");
  v.expect(ds.instance.villages.size() == 304 && ds.instance.traders.size() == 154 &&
               ds.instance.transactions.size() == 9481,
           "synthetic counts differ from 304/154/9481");
  const ScenarioResult base = run_scenario(ds, {});
  ScenarioConfig clustered_cfg;
  clustered_cfg.clustering = true;
  const ScenarioResult clustered = run_scenario(ds, clustered_cfg);
  ScenarioConfig reduced_cfg;
  reduced_cfg.supply_scale = 0.75;
  const ScenarioResult reduced = run_scenario(ds, reduced_cfg);
  const double t = seconds_since(t0);

  v.expect(t < 300, "took " + secs(t));
  v.expect(base.actual_cost && base.optimized_cost < *base.actual_cost, "optimized cost not below actual");
  v.expect(base.optimized_pairs <= base.historical_pairs, "optimized network uses more edges than history");
  v.expect(base.stats.certified && clustered.stats.certified && reduced.stats.certified, "uncertified solve");
  Units zero = 0;
  for (const auto& tr : reduced.traders) zero += tr.received == 0;
  const SurvivalCurve* curve = nullptr;
  for (const auto& c : reduced.curves) {
    if (c.name == "optimized_trader_intake") curve = &c;
  }
  v.expect(curve && curve->points.front().value == 0 && zero > 0 &&
               (curve->points.size() == 1 || curve->share(1) < 1.0),
           "no mass at zero intake after supply reduction");
  demands_out = trader_demands(ds.instance);
  if (v.ok) {
    std::ostringstream d;
    d << "actual " << format_milli(*base.actual_cost) << " tree-km, optimized " << format_milli(base.optimized_cost)
      << " (ratio " << format_fixed(*base.cost_ratio(), 3) << "), clustered " << format_milli(clustered.optimized_cost)
      << "; edges " << base.optimized_pairs << " <= " << base.historical_pairs << "; " << zero << "/"
      << reduced.traders.size() << " traders at zero after -25% supply; " << secs(t);
    v.detail = d.str();
  }
  return v;
}

// 7. Five classes, exact conservation, monotone Ward costs, repeatable labels.
Verdict clustering(const std::vector<Units>& full_demands) {
  Verdict v;
  std::mt19937_64 rng(99);
  std::vector<std::vector<Units>> cases{full_demands};
  for (int i = 0; i < 200; ++i) {
    std::vector<Units> d;
    const int n = static_cast<int>(testing::uniform(rng, 5, 160));
    const Units spread = testing::uniform(rng, 1, 100000);
    for (int k = 0; k < n; ++k) d.push_back(testing::uniform(rng, 0, spread));
    cases.push_back(std::move(d));
  }
  for (const auto& d : cases) {
    const ClusterModel m = cluster_traders(d);
    v.expect(m.classes.size() == 5, "class count " + std::to_string(m.classes.size()));
    const ModeratedDemands md = moderate_demands(m, d);
    v.expect(std::accumulate(md.permits.begin(), md.permits.end(), Units{0}) ==
                 std::accumulate(d.begin(), d.end(), Units{0}),
             "permits do not conserve demand");
    v.expect(merges_monotone(m.merges), "Ward merge costs decrease");
    const ClusterModel again = cluster_traders(d);
    bool same = again.class_of == m.class_of;
    for (std::size_t c = 0; c < m.classes.size(); ++c) same = same && again.classes[c].label == m.classes[c].label;
    v.expect(same, "labels differ between runs");
  }
  if (v.ok) v.detail = std::to_string(cases.size()) + " demand vectors incl. the full-scale synthetic traders";
  return v;
}

struct CliRun {
  int code;
  std::string out;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "timberflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str()};
}

// 8. Repeated CLI runs are byte-identical; the oracle report matches its golden file.
Verdict determinism() {
  Verdict v;
  const auto dir = std::filesystem::temp_directory_path() / "timberflow_acceptance";
  std::filesystem::remove_all(dir);
  const std::vector<std::string> synth{"--villages", "60", "--traders", "25", "--farms", "800", "--transactions",
                                       "1200",       "--extent-m", "30000", "--seed", "11"};
  auto synth_to = [&](const std::string& name) {
    std::vector<std::string> args{"synth", "--out", (dir / name).string()};
    args.insert(args.end(), synth.begin(), synth.end());
    return cli(args).code;
  };
  v.expect(synth_to("a") == 0 && synth_to("b") == 0, "synth failed");
  for (const auto& f : std::filesystem::directory_iterator(dir / "a")) {
    v.expect(read_file(f.path()) == read_file(dir / "b" / f.path().filename()), "synth output differs");
  }
  const std::string data = (dir / "a").string();
  write_file(dir / "reduced.json", R"({"supply_scale": 0.75, "trader_floor": 1})");
  const std::vector<std::vector<std::string>> commands{
      {"validate", "--data", data},
      {"odmatrix", "--data", data, "--threads", "4"},
      {"optimize", "--data", data},
      {"optimize", "--data", data, "--solver", "successive-shortest-paths", "--format", "text"},
      {"cluster", "--data", data},
      {"scenario", "--config", (dir / "reduced.json").string(), "--data", data},
  };
  int runs = 0;
  for (const auto& c : commands) {
    const CliRun a = cli(c), b = cli(c);
    v.expect(a.code == 0 && !a.out.empty(), c[0] + " failed");
    v.expect(a.out == b.out, c[0] + " output differs between runs");
    runs += 2;
  }
  const CliRun golden = cli({"optimize", "--data", (kFixtures / "two_by_two").string()});
  v.expect(golden.out == read_file(kGolden / "two_by_two_report.json"), "2x2 report differs from golden file");
  v.expect(parse_report(golden.out).result.optimized_cost == 11, "2x2 optimum is not 11");
  std::filesystem::remove_all(dir);
  if (v.ok) v.detail = std::to_string(runs + 2) + " CLI runs byte-identical in pairs; 2x2 report = golden";
  return v;
}

// 2. Every solve above leaves no negative residual cycle.
Verdict certificates() {
  Verdict v;
  for (const auto& [net, r] : g_solved) v.expect(!optimality_certificate(r), "negative cycle left after a solve");
  const SolveAudit a = solve_audit();
  v.expect(a.solves == a.certified, std::to_string(a.solves - a.certified) + " uncertified solves");
  if (v.ok) {
    v.detail = std::to_string(g_solved.size()) + " results re-checked; " + std::to_string(a.solves) +
               " solves in this run, all certified";
  }
  return v;
}

}  // namespace

int main() {
  struct Row {
    int id;
    const char* name;
    Verdict verdict;
  };
  std::vector<Row> rows;
  auto run = [&](int id, const char* name, const std::function<Verdict()>& f) {
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    rows.push_back({id, name, v});
  };
  std::vector<Units> full_demands;
  run(1, "oracle equivalence", oracle_equivalence);
  run(4, "max-flow law", max_flow_law);
  run(3, "feasibility", feasibility);
  run(5, "shortest-path oracle", shortest_paths);
  run(6, "full-scale smoke", [&] { return full_scale(full_demands); });
  run(7, "clustering", [&] { return clustering(full_demands); });
  run(8, "determinism", determinism);
  run(2, "optimality certificate", certificates);
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
  bool all = true;
  for (const auto& r : rows) {
    std::cout << "criterion " << r.id << " " << (r.verdict.ok ? "PASS" : "FAIL") << "  " << r.name << ": "
              << r.verdict.detail << "\n";
    all = all && r.verdict.ok;
  }
  return all ? 0 : 1;
}
