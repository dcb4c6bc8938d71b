#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace timberflow {

using Units = std::int64_t;  // trees
using Cost = std::int64_t;   // per-unit costs are integer metres

struct Edge {
  int tail = 0;
  int head = 0;
  Units capacity = 0;
  Units lower_bound = 0;
  Cost cost = 0;
};

// Directed network with integer capacities, lower bounds and unit costs.
// Nodes are dense indices 0..node_count()-1; edges keep the index they were
// added with, so parallel edges stay distinguishable.
class FlowNetwork {
 public:
  FlowNetwork() = default;
  explicit FlowNetwork(int node_count);

  int add_node(Units balance = 0);
  // Throws InputError on self loops, unknown nodes or 0 <= lb <= cap violations.
  int add_edge(int tail, int head, Units capacity, Cost cost, Units lower_bound = 0);
  void set_balance(int node, Units balance);

  int node_count() const { return static_cast<int>(balances_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const Edge& edge(int index) const { return edges_.at(index); }
  const std::vector<Edge>& edges() const { return edges_; }
  Units balance(int node) const { return balances_.at(node); }
  std::span<const Units> balances() const { return balances_; }

  Units total_supply() const;
  Units total_demand() const;
  bool has_lower_bounds() const;

 private:
  std::vector<Edge> edges_;
  std::vector<Units> balances_;
};

// Per-edge flow, indexed like FlowNetwork::edges().
struct Flow {
  std::vector<Units> values;

  Flow() = default;
  explicit Flow(std::size_t edge_count) : values(edge_count, 0) {}
  explicit Flow(std::vector<Units> v) : values(std::move(v)) {}

  Units operator[](std::size_t i) const { return values[i]; }
  Units& operator[](std::size_t i) { return values[i]; }
  std::size_t size() const { return values.size(); }
  bool operator==(const Flow&) const = default;
};

// Single-source single-sink form of a supply/demand network.
//
// Node numbering: source = 0, original node i = i + 1, sink = n + 1.
// Edge numbering: original edges keep their index, followed by one source
// edge per supply node and then one sink edge per demand node, each group in
// ascending node order.
struct StNetwork {
  FlowNetwork network;
  int source = 0;
  int sink = 1;
  int original_node_count = 0;
  int original_edge_count = 0;
  std::vector<int> source_edge;  // per original node, -1 when b(i) <= 0
  std::vector<int> sink_edge;    // per original node, -1 when b(i) >= 0

  int node_of(int original) const { return original + 1; }

  // Copy of `network` with b(source) = value and b(sink) = -value, which is
  // the balance vector any s-t flow of that value conserves exactly.
  FlowNetwork with_flow_value(Units value) const;
};

// Rejects nonzero lower bounds.
StNetwork build_st_transform(const FlowNetwork& net);

namespace detail {
// Same construction but interior lower bounds are carried over unchanged.
StNetwork embed_st(const FlowNetwork& net);
}  // namespace detail

struct LowerBoundTransform {
  FlowNetwork network;
  Cost offset_cost = 0;
};

// Shifts every lower bound into the balances: u -= l, b(tail) -= l,
// b(head) += l. offset_cost = sum of l * c.
LowerBoundTransform lower_bound_transform(const FlowNetwork& net);

// x = x' + l for a flow of the transformed network.
Flow restore_lower_bounds(const FlowNetwork& original, const Flow& transformed);

struct ResidualArc {
  int tail = 0;
  int head = 0;
  Units residual = 0;
  Cost cost = 0;
  int edge = 0;
  bool forward = true;
};

struct ResidualGraph {
  int node_count = 0;
  std::vector<ResidualArc> arcs;  // forward arcs in edge order, then backward
};

// Throws InputError naming the first violation when f is infeasible.
ResidualGraph residual_graph(const FlowNetwork& net, const Flow& f);

// How node balances are checked.
//   exact:    out - in == b(i) for every node.
//   up_to:    supply nodes ship within [0, b], demand nodes absorb within
//             [0, -b], transshipment nodes conserve. This is what a maximum
//             flow on an unbalanced market satisfies.
enum class BalanceRule { exact, up_to };

struct Violation {
  enum class Kind { capacity, lower_bound, balance };
  Kind kind = Kind::capacity;
  int index = -1;  // edge for capacity/lower_bound, node for balance
  Units expected = 0;
  Units observed = 0;

  std::string describe() const;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_flow(const FlowNetwork& net, const Flow& f,
                               BalanceRule rule = BalanceRule::exact);

// Exact sum of c * x. Throws std::overflow_error rather than wrapping.
Cost flow_cost(const FlowNetwork& net, const Flow& f);

// Net outflow of every node under f.
std::vector<Units> net_outflow(const FlowNetwork& net, const Flow& f);

}  // namespace timberflow
