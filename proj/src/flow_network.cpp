#include "timberflow/flow_network.hpp"

#include <sstream>

#include "timberflow/checked.hpp"
#include "timberflow/error.hpp"

namespace timberflow {

FlowNetwork::FlowNetwork(int node_count) : balances_(static_cast<std::size_t>(node_count), 0) {}

int FlowNetwork::add_node(Units balance) {
  balances_.push_back(balance);
  return node_count() - 1;
}

int FlowNetwork::add_edge(int tail, int head, Units capacity, Cost cost, Units lower_bound) {
  if (tail < 0 || tail >= node_count() || head < 0 || head >= node_count()) {
    throw InputError("edge references unknown node");
  }
  if (tail == head) throw InputError("self-loop edge on node " + std::to_string(tail));
  if (lower_bound < 0 || lower_bound > capacity) {
    throw InputError("edge " + std::to_string(edges_.size()) + " violates 0 <= lower_bound <= capacity");
  }
  edges_.push_back(Edge{tail, head, capacity, lower_bound, cost});
  return edge_count() - 1;
}

void FlowNetwork::set_balance(int node, Units balance) { balances_.at(node) = balance; }

Units FlowNetwork::total_supply() const {
  Units total = 0;
  for (Units b : balances_) {
    if (b > 0) total = checked_add(total, b);
  }
  return total;
}

Units FlowNetwork::total_demand() const {
  Units total = 0;
  for (Units b : balances_) {
    if (b < 0) total = checked_add(total, -b);
  }
  return total;
}

bool FlowNetwork::has_lower_bounds() const {
  for (const Edge& e : edges_) {
    if (e.lower_bound != 0) return true;
  }
  return false;
}

FlowNetwork StNetwork::with_flow_value(Units value) const {
  FlowNetwork copy = network;
  copy.set_balance(source, value);
  copy.set_balance(sink, -value);
  return copy;
}

namespace detail {

StNetwork embed_st(const FlowNetwork& net) {
  const int n = net.node_count();
  StNetwork st;
  st.original_node_count = n;
  st.original_edge_count = net.edge_count();
  st.network = FlowNetwork(n + 2);
  st.source = 0;
  st.sink = n + 1;
  for (const Edge& e : net.edges()) {
    if (e.capacity < 0) throw InputError("negative capacity");
    st.network.add_edge(e.tail + 1, e.head + 1, e.capacity, e.cost, e.lower_bound);
  }
  st.source_edge.assign(static_cast<std::size_t>(n), -1);
  st.sink_edge.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (net.balance(i) > 0) st.source_edge[i] = st.network.add_edge(st.source, i + 1, net.balance(i), 0);
  }
  for (int i = 0; i < n; ++i) {
    if (net.balance(i) < 0) st.sink_edge[i] = st.network.add_edge(i + 1, st.sink, -net.balance(i), 0);
  }
  return st;
}

}  // namespace detail

StNetwork build_st_transform(const FlowNetwork& net) {
  if (net.has_lower_bounds()) {
    throw InputError("build_st_transform requires zero lower bounds; apply lower_bound_transform first");
  }
  return detail::embed_st(net);
}

LowerBoundTransform lower_bound_transform(const FlowNetwork& net) {
  LowerBoundTransform out;
  out.network = FlowNetwork(net.node_count());
  std::vector<Units> balances(net.balances().begin(), net.balances().end());
  for (const Edge& e : net.edges()) {
    out.network.add_edge(e.tail, e.head, e.capacity - e.lower_bound, e.cost, 0);
    balances[e.tail] -= e.lower_bound;
    balances[e.head] += e.lower_bound;
    out.offset_cost = checked_add(out.offset_cost, checked_mul(e.lower_bound, e.cost));
  }
  for (int i = 0; i < net.node_count(); ++i) out.network.set_balance(i, balances[i]);
  return out;
}

Flow restore_lower_bounds(const FlowNetwork& original, const Flow& transformed) {
  if (transformed.size() != static_cast<std::size_t>(original.edge_count())) {
    throw InputError("flow size does not match network edge count");
  }
  Flow out = transformed;
  for (int i = 0; i < original.edge_count(); ++i) out[i] += original.edge(i).lower_bound;
  return out;
}

std::vector<Units> net_outflow(const FlowNetwork& net, const Flow& f) {
  if (f.size() != static_cast<std::size_t>(net.edge_count())) {
    throw InputError("flow has " + std::to_string(f.size()) + " entries but network has " +
                     std::to_string(net.edge_count()) + " edges");
  }
  std::vector<Units> out(static_cast<std::size_t>(net.node_count()), 0);
  for (int i = 0; i < net.edge_count(); ++i) {
    const Edge& e = net.edge(i);
    out[e.tail] = checked_add(out[e.tail], f[i]);
    out[e.head] = checked_add(out[e.head], -f[i]);
  }
  return out;
}

std::string Violation::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::capacity:
      os << "edge " << index << " carries " << observed << " above capacity " << expected;
      break;
    case Kind::lower_bound:
      os << "edge " << index << " carries " << observed << " below lower bound " << expected;
      break;
    case Kind::balance:
      os << "node " << index << " has net outflow " << observed << ", expected " << expected;
      break;
  }
  return os.str();
}

ValidationReport validate_flow(const FlowNetwork& net, const Flow& f, BalanceRule rule) {
  ValidationReport report;
  const std::vector<Units> out = net_outflow(net, f);
  for (int i = 0; i < net.edge_count(); ++i) {
    const Edge& e = net.edge(i);
    if (f[i] > e.capacity) report.violations.push_back({Violation::Kind::capacity, i, e.capacity, f[i]});
    if (f[i] < e.lower_bound) {
      report.violations.push_back({Violation::Kind::lower_bound, i, e.lower_bound, f[i]});
    }
  }
  for (int v = 0; v < net.node_count(); ++v) {
    const Units b = net.balance(v);
    bool ok = false;
    if (rule == BalanceRule::exact || b == 0) {
      ok = out[v] == b;
    } else if (b > 0) {
      ok = out[v] >= 0 && out[v] <= b;
    } else {
      ok = out[v] <= 0 && out[v] >= b;
    }
    if (!ok) report.violations.push_back({Violation::Kind::balance, v, b, out[v]});
  }
  return report;
}

ResidualGraph residual_graph(const FlowNetwork& net, const Flow& f) {
  const ValidationReport report = validate_flow(net, f);
  if (!report.ok()) throw InputError("infeasible flow: " + report.violations.front().describe());

  ResidualGraph res;
  res.node_count = net.node_count();
  res.arcs.reserve(2 * f.size());
  for (int i = 0; i < net.edge_count(); ++i) {
    const Edge& e = net.edge(i);
    if (e.capacity - f[i] > 0) res.arcs.push_back({e.tail, e.head, e.capacity - f[i], e.cost, i, true});
  }
  for (int i = 0; i < net.edge_count(); ++i) {
    const Edge& e = net.edge(i);
    if (f[i] - e.lower_bound > 0) {
      res.arcs.push_back({e.head, e.tail, f[i] - e.lower_bound, -e.cost, i, false});
    }
  }
  return res;
}

Cost flow_cost(const FlowNetwork& net, const Flow& f) {
  if (f.size() != static_cast<std::size_t>(net.edge_count())) {
    throw InputError("flow size does not match network edge count");
  }
  Cost total = 0;
  for (int i = 0; i < net.edge_count(); ++i) total = checked_add(total, checked_mul(net.edge(i).cost, f[i]));
  return total;
}

}  // namespace timberflow
