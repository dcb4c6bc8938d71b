#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "timberflow/flow_network.hpp"

namespace timberflow {

struct SolveStats {
  std::int64_t augmentations = 0;
  std::int64_t cycles_canceled = 0;
  Units final_flow_value = 0;
  Cost final_cost = 0;
  // Set when the final residual graph was checked to hold no negative cycle.
  bool certified = false;
  std::chrono::nanoseconds wall_time{0};
  // Cost after every cancellation, starting with the cost of the input flow.
  std::vector<Cost> cost_trace;
};

struct AugmentingPath {
  std::vector<ResidualArc> arcs;
  Units bottleneck = 0;
};

struct NegativeCycle {
  std::vector<int> arcs;  // indices into ResidualGraph::arcs, in cycle order
  Cost total_cost = 0;
  Units bottleneck = 0;
};

struct MaxFlowResult {
  Flow flow;
  Units value = 0;
  SolveStats stats;
};

// Edmonds-Karp: breadth-first augmenting paths, exploring each node's
// residual arcs in residual_graph() order so ties go to the lowest arc.
MaxFlowResult max_flow(const StNetwork& st);

// Continues augmenting from a flow that already respects every bound of
// `net`. Lower bounds are honoured via backward residual x - l. Returns the
// number of augmenting paths used.
std::int64_t augment_to_max_flow(const FlowNetwork& net, int source, int sink, Flow& flow);

// First s-t augmenting path in BFS order, if any.
std::optional<AugmentingPath> find_augmenting_path(const FlowNetwork& net, int source, int sink,
                                                   const Flow& flow);

// Bellman-Ford from a virtual root joined to every node by zero-cost arcs.
// The predecessor graph is inspected after every pass; the first node (by
// index) sitting on a predecessor cycle identifies the returned cycle.
std::optional<NegativeCycle> find_negative_cycle(const ResidualGraph& res);

struct CancelResult {
  Flow flow;
  SolveStats stats;
};

// Requires f to satisfy `net` exactly (BalanceRule::exact).
CancelResult cancel_cycles(const FlowNetwork& net, Flow f);

enum class SolverKind { cycle_canceling, successive_shortest_paths };

// Maximum-value, minimum-cost flow for a supply/demand network.
//
// Supply nodes ship at most b(i), demand nodes absorb at most -b(i),
// transshipment nodes conserve, and every edge lower bound is enforced. The
// shipped total is maximised first and the cost second.
struct MinCostFlowResult {
  Flow flow;     // on the input network
  Units value = 0;
  Cost cost = 0;
  StNetwork st;  // embedding used by the solve (interior lower bounds kept)
  Flow st_flow;  // conserves exactly on st.with_flow_value(value)
  SolveStats stats;
};

// Ford-Fulkerson max flow followed by cycle canceling.
MinCostFlowResult min_cost_flow(const FlowNetwork& net);

// Independent route: shortest augmenting paths under node potentials.
MinCostFlowResult successive_shortest_paths(const FlowNetwork& net);

MinCostFlowResult solve(const FlowNetwork& net, SolverKind kind);

// Residual check of a finished solve; empty means optimal for its value.
std::optional<NegativeCycle> optimality_certificate(const MinCostFlowResult& result);

struct BruteForceResult {
  Units value = 0;
  Cost cost = 0;
  Flow flow;
};

// Exhaustive search over integer flows with the same semantics as
// min_cost_flow. Returns nullopt when the lower bounds admit no flow and
// throws DomainError once `state_budget` search nodes have been visited.
std::optional<BruteForceResult> brute_force_min_cost(const FlowNetwork& net,
                                                     std::int64_t state_budget = 50'000'000);

// Process-wide tally of min_cost_flow / successive_shortest_paths calls and of
// how many ended with no negative residual cycle.
struct SolveAudit {
  std::int64_t solves = 0;
  std::int64_t certified = 0;
};
SolveAudit solve_audit();

const char* to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

}  // namespace timberflow
