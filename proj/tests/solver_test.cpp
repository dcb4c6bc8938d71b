#include "timberflow/solver.hpp"

#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "timberflow/error.hpp"

using namespace timberflow;
using timberflow::testing::bipartite;

namespace {

FlowNetwork two_by_two() { return bipartite({5, 5}, {4, 6}, {{1, 2}, {3, 1}}); }

void check_solution(const FlowNetwork& net, const MinCostFlowResult& r) {
  CHECK(validate_flow(net, r.flow, BalanceRule::up_to).ok());
  CHECK(validate_flow(r.st.with_flow_value(r.value), r.st_flow).ok());
  CHECK(r.stats.certified);
  CHECK_FALSE(optimality_certificate(r).has_value());
  CHECK(r.cost == flow_cost(net, r.flow));
  CHECK(r.stats.final_cost == r.cost);
}

}  // namespace

TEST_CASE("brute force: 2x2 instance matches the one-parameter family of balanced flows") {
  // With all supply shipped, x11 = a fixes the rest: x12 = 5-a, x21 = 4-a,
  // x22 = 1+a, cost 23 - 3a for a in [0, 4].
  Cost family_min = 1'000'000;
  for (int a = 0; a <= 4; ++a) family_min = std::min<Cost>(family_min, 23 - 3 * a);
  REQUIRE(family_min == 11);

  const auto best = brute_force_min_cost(two_by_two());
  REQUIRE(best);
  CHECK(best->cost == family_min);
  CHECK(best->value == 10);
  CHECK(best->flow == Flow(std::vector<Units>{4, 1, 0, 5}));
}

TEST_CASE("brute force edge cases") {
  SUBCASE("zero supply") {
    const auto best = brute_force_min_cost(bipartite({0, 0}, {3}, {{4}, {5}}));
    REQUIRE(best);
    CHECK(best->cost == 0);
    CHECK(best->value == 0);
  }
  SUBCASE("unachievable lower bound") {
    FlowNetwork net(2);
    net.set_balance(0, 2);
    net.set_balance(1, -2);
    net.add_edge(0, 1, 5, 1, 3);
    CHECK_FALSE(brute_force_min_cost(net).has_value());
  }
  SUBCASE("too large") {
    const FlowNetwork big = bipartite(std::vector<Units>(8, 40), std::vector<Units>(8, 40),
                                      std::vector<std::vector<Cost>>(8, std::vector<Cost>(8, 1)));
    CHECK_THROWS_AS(brute_force_min_cost(big, 100'000), DomainError);
  }
}

TEST_CASE("max flow: bottleneck") {
  StNetwork st;
  st.network = FlowNetwork(3);
  st.source = 0;
  st.sink = 2;
  st.network.add_edge(0, 1, 5, 0);
  st.network.add_edge(1, 2, 3, 0);
  const MaxFlowResult r = max_flow(st);
  CHECK(r.value == 3);
  CHECK(r.flow == Flow(std::vector<Units>{3, 3}));
  CHECK(r.stats.augmentations == 1);
}

TEST_CASE("max flow: 2x2 ships min(supply, demand) and leaves no augmenting path") {
  const StNetwork st = build_st_transform(two_by_two());
  const MaxFlowResult r = max_flow(st);
  CHECK(r.value == 10);
  CHECK(validate_flow(st.with_flow_value(r.value), r.flow).ok());
  CHECK_FALSE(find_augmenting_path(st.network, st.source, st.sink, r.flow).has_value());
}

TEST_CASE("max flow: unreachable demand carries nothing") {
  // Trader 3 has no incoming edge.
  FlowNetwork net(4);
  net.set_balance(0, 10);
  net.set_balance(1, -4);
  net.set_balance(2, -3);
  net.set_balance(3, -7);
  net.add_edge(0, 1, 10, 1);
  net.add_edge(0, 2, 10, 1);
  const StNetwork st = build_st_transform(net);
  const MaxFlowResult r = max_flow(st);
  CHECK(r.value == 7);
  CHECK(r.flow[st.sink_edge[3]] == 0);
}

TEST_CASE("augmenting path reports the bottleneck") {
  const StNetwork st = build_st_transform(two_by_two());
  const auto path = find_augmenting_path(st.network, st.source, st.sink, Flow(st.network.edge_count()));
  REQUIRE(path);
  CHECK(path->bottleneck >= 1);
  for (std::size_t i = 1; i < path->arcs.size(); ++i) CHECK(path->arcs[i - 1].head == path->arcs[i].tail);
  Units min_res = path->arcs.front().residual;
  for (const auto& a : path->arcs) min_res = std::min(min_res, a.residual);
  CHECK(path->bottleneck == min_res);
}

TEST_CASE("negative cycle detection") {
  SUBCASE("three-arc cycle with costs +2, -5, +1") {
    ResidualGraph res;
    res.node_count = 3;
    res.arcs = {{0, 1, 4, 2, 0, true}, {1, 2, 2, -5, 1, true}, {2, 0, 7, 1, 2, true}};
    const auto cycle = find_negative_cycle(res);
    REQUIRE(cycle);
    CHECK(cycle->total_cost == -2);
    CHECK(cycle->bottleneck == 2);
    CHECK(cycle->arcs.size() == 3);
    for (std::size_t i = 0; i < cycle->arcs.size(); ++i) {
      const auto& a = res.arcs[cycle->arcs[i]];
      const auto& b = res.arcs[cycle->arcs[(i + 1) % cycle->arcs.size()]];
      CHECK(a.head == b.tail);
    }
  }
  SUBCASE("non-negative cycle") {
    ResidualGraph res;
    res.node_count = 2;
    res.arcs = {{0, 1, 1, 3, 0, true}, {1, 0, 1, -3, 0, false}};
    CHECK_FALSE(find_negative_cycle(res).has_value());
  }
  SUBCASE("empty") { CHECK_FALSE(find_negative_cycle(ResidualGraph{}).has_value()); }
  SUBCASE("residuals of brute-force optima on random balanced instances") {
    std::mt19937_64 rng(41);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
      auto r = timberflow::testing::random_bipartite(rng, 3, 3, 5, 9);
      if (r.net.total_supply() != r.net.total_demand()) continue;
      const auto best = brute_force_min_cost(r.net);
      REQUIRE(best);
      CHECK_FALSE(find_negative_cycle(residual_graph(r.net, best->flow)).has_value());
      ++checked;
    }
    CHECK(checked > 10);
  }
}

TEST_CASE("cycle canceling") {
  SUBCASE("already optimal flow is unchanged") {
    const FlowNetwork net = two_by_two();
    const Flow optimal(std::vector<Units>{4, 1, 0, 5});
    const CancelResult r = cancel_cycles(net, optimal);
    CHECK(r.flow == optimal);
    CHECK(r.stats.cycles_canceled == 0);
  }
  SUBCASE("2x2 from an arbitrary max flow reaches 11") {
    const FlowNetwork net = two_by_two();
    const StNetwork st = build_st_transform(net);
    const MaxFlowResult mf = max_flow(st);
    const CancelResult r = cancel_cycles(st.with_flow_value(mf.value), mf.flow);
    CHECK(r.stats.final_cost == 11);
    for (std::size_t i = 1; i < r.stats.cost_trace.size(); ++i) {
      CHECK(r.stats.cost_trace[i] < r.stats.cost_trace[i - 1]);
    }
  }
  SUBCASE("single four-arc exchange") {
    const FlowNetwork net = bipartite({5, 5}, {5, 5}, {{1, 10}, {10, 1}});
    const Flow crossed(std::vector<Units>{0, 5, 5, 0});
    REQUIRE(flow_cost(net, crossed) == 100);
    const auto cycle = find_negative_cycle(residual_graph(net, crossed));
    REQUIRE(cycle);
    CHECK(cycle->arcs.size() == 4);
    CHECK(cycle->total_cost == -18);
    CHECK(cycle->bottleneck == 5);
    const CancelResult r = cancel_cycles(net, crossed);
    CHECK(r.stats.cycles_canceled == 1);
    CHECK(flow_cost(net, r.flow) == 100 - 5 * 18);
    CHECK(r.flow == Flow(std::vector<Units>{5, 0, 0, 5}));
  }
  SUBCASE("infeasible start") {
    CHECK_THROWS_AS(cancel_cycles(two_by_two(), Flow(std::vector<Units>{1, 1, 1, 1})), InputError);
  }
}

TEST_CASE("min cost flow examples") {
  for (SolverKind kind : {SolverKind::cycle_canceling, SolverKind::successive_shortest_paths}) {
    CAPTURE(to_string(kind));
    SUBCASE("2x2") {
      const FlowNetwork net = two_by_two();
      const MinCostFlowResult r = solve(net, kind);
      check_solution(net, r);
      CHECK(r.cost == 11);
      CHECK(r.value == 10);
      CHECK(r.flow == Flow(std::vector<Units>{4, 1, 0, 5}));
    }
    SUBCASE("single edge") {
      const FlowNetwork net = bipartite({5}, {5}, {{7}});
      const MinCostFlowResult r = solve(net, kind);
      check_solution(net, r);
      CHECK(r.cost == 35);
    }
    SUBCASE("short supply ships everything it has") {
      const FlowNetwork net = bipartite({3, 2}, {4, 6}, {{1, 2}, {3, 1}});
      const MinCostFlowResult r = solve(net, kind);
      check_solution(net, r);
      CHECK(r.value == 5);
    }
  }
}

TEST_CASE("oracle triangle on random bipartite instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = timberflow::testing::random_bipartite(rng);
    const auto brute = brute_force_min_cost(r.net);
    REQUIRE(brute);
    const MinCostFlowResult cc = min_cost_flow(r.net);
    const MinCostFlowResult ssp = successive_shortest_paths(r.net);
    check_solution(r.net, cc);
    check_solution(r.net, ssp);
    CHECK(cc.value == std::min(r.net.total_supply(), r.net.total_demand()));
    CHECK(cc.value == brute->value);
    CHECK(ssp.value == brute->value);
    CHECK(cc.cost == brute->cost);
    CHECK(ssp.cost == brute->cost);
  }
}

TEST_CASE("lower bounds: solvers agree with exhaustive search, including infeasible cases") {
  std::mt19937_64 rng(77);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto r = timberflow::testing::random_feasible(rng, 5, 7, 3, 9);
    // Loosen or break the balances so both regimes show up.
    for (int v = 0; v < r.net.node_count(); ++v) {
      r.net.set_balance(v, r.net.balance(v) + timberflow::testing::uniform(rng, -2, 2));
    }
    const auto brute = brute_force_min_cost(r.net);
    if (!brute) {
      CHECK_THROWS_AS(min_cost_flow(r.net), InfeasibleError);
      CHECK_THROWS_AS(successive_shortest_paths(r.net), InfeasibleError);
      ++infeasible;
      continue;
    }
    ++feasible;
    const MinCostFlowResult cc = min_cost_flow(r.net);
    const MinCostFlowResult ssp = successive_shortest_paths(r.net);
    check_solution(r.net, cc);
    check_solution(r.net, ssp);
    CHECK(cc.value == brute->value);
    CHECK(ssp.value == brute->value);
    CHECK(cc.cost == brute->cost);
    CHECK(ssp.cost == brute->cost);
  }
  CHECK(feasible > 50);
  CHECK(infeasible > 10);
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto r = timberflow::testing::random_bipartite(rng, 6, 5, 20, 30);
    CHECK(min_cost_flow(r.net).flow == min_cost_flow(r.net).flow);
    CHECK(successive_shortest_paths(r.net).flow == successive_shortest_paths(r.net).flow);
  }
}

TEST_CASE("solver names round trip") {
  CHECK(solver_kind_from_string("cycle-canceling") == SolverKind::cycle_canceling);
  CHECK(solver_kind_from_string(to_string(SolverKind::successive_shortest_paths)) ==
        SolverKind::successive_shortest_paths);
  CHECK_THROWS_AS(solver_kind_from_string("simplex"), InputError);
}
