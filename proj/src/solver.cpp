#include "timberflow/solver.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

#include "timberflow/checked.hpp"
#include "timberflow/error.hpp"

namespace timberflow {
namespace {

using Clock = std::chrono::steady_clock;

// Per-node incident edges, used to walk residual arcs of a live flow in the
// same order residual_graph() would list them.
struct Incidence {
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> in;

  explicit Incidence(const FlowNetwork& net)
      : out(static_cast<std::size_t>(net.node_count())), in(static_cast<std::size_t>(net.node_count())) {
    for (int i = 0; i < net.edge_count(); ++i) {
      out[net.edge(i).tail].push_back(i);
      in[net.edge(i).head].push_back(i);
    }
  }
};

struct ArcRef {
  int edge = -1;
  bool forward = true;
};

Units arc_residual(const FlowNetwork& net, const Flow& f, ArcRef a) {
  const Edge& e = net.edge(a.edge);
  return a.forward ? e.capacity - f[a.edge] : f[a.edge] - e.lower_bound;
}

int arc_tail(const FlowNetwork& net, ArcRef a) { return a.forward ? net.edge(a.edge).tail : net.edge(a.edge).head; }
int arc_head(const FlowNetwork& net, ArcRef a) { return a.forward ? net.edge(a.edge).head : net.edge(a.edge).tail; }
Cost arc_cost(const FlowNetwork& net, ArcRef a) { return a.forward ? net.edge(a.edge).cost : -net.edge(a.edge).cost; }

void push_along(Flow& f, ArcRef a, Units amount) {
  if (a.forward) {
    f[a.edge] += amount;
  } else {
    f[a.edge] -= amount;
  }
}

template <typename Visit>
void for_each_residual_arc(const FlowNetwork& net, const Incidence& inc, const Flow& f, int node, Visit&& visit) {
  for (int e : inc.out[node]) {
    ArcRef a{e, true};
    if (arc_residual(net, f, a) > 0) visit(a);
  }
  for (int e : inc.in[node]) {
    ArcRef a{e, false};
    if (arc_residual(net, f, a) > 0) visit(a);
  }
}

std::optional<std::vector<ArcRef>> bfs_path(const FlowNetwork& net, const Incidence& inc, int source, int sink,
                                            const Flow& f) {
  std::vector<ArcRef> pred(static_cast<std::size_t>(net.node_count()));
  std::vector<char> seen(static_cast<std::size_t>(net.node_count()), 0);
  std::deque<int> queue{source};
  seen[source] = 1;
  while (!queue.empty() && !seen[sink]) {
    const int u = queue.front();
    queue.pop_front();
    for_each_residual_arc(net, inc, f, u, [&](ArcRef a) {
      const int v = arc_head(net, a);
      if (seen[v]) return;
      seen[v] = 1;
      pred[v] = a;
      queue.push_back(v);
    });
  }
  if (!seen[sink]) return std::nullopt;
  std::vector<ArcRef> path;
  for (int v = sink; v != source; v = arc_tail(net, pred[v])) path.push_back(pred[v]);
  std::reverse(path.begin(), path.end());
  return path;
}

Units path_bottleneck(const FlowNetwork& net, const Flow& f, const std::vector<ArcRef>& path) {
  Units b = std::numeric_limits<Units>::max();
  for (ArcRef a : path) b = std::min(b, arc_residual(net, f, a));
  return b;
}

// Bellman-Ford shortest distances from a virtual root over the residual arcs
// of f. Requires that no negative cycle exists.
std::vector<Cost> residual_potentials(const FlowNetwork& net, const Flow& f) {
  const int n = net.node_count();
  std::vector<Cost> dist(static_cast<std::size_t>(n), 0);
  for (int pass = 0; pass <= n + 1; ++pass) {
    bool changed = false;
    for (int e = 0; e < net.edge_count(); ++e) {
      for (bool forward : {true, false}) {
        ArcRef a{e, forward};
        if (arc_residual(net, f, a) <= 0) continue;
        const Cost cand = dist[arc_tail(net, a)] + arc_cost(net, a);
        if (cand < dist[arc_head(net, a)]) {
          dist[arc_head(net, a)] = cand;
          changed = true;
        }
      }
    }
    if (!changed) return dist;
  }
  throw std::logic_error("residual graph has a negative cycle; potentials undefined");
}

// Successive shortest augmenting paths from `flow`, which must already be
// optimal for its own value (no negative residual cycle).
void ssp_augment(const FlowNetwork& net, int source, int sink, Flow& flow, SolveStats& stats) {
  const Incidence inc(net);
  const int n = net.node_count();
  std::vector<Cost> potential = residual_potentials(net, flow);
  constexpr Cost kInf = std::numeric_limits<Cost>::max();

  for (;;) {
    std::vector<Cost> dist(static_cast<std::size_t>(n), kInf);
    std::vector<ArcRef> pred(static_cast<std::size_t>(n));
    using Entry = std::pair<Cost, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[source] = 0;
    heap.push({0, source});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d != dist[u]) continue;
      for_each_residual_arc(net, inc, flow, u, [&](ArcRef a) {
        const int v = arc_head(net, a);
        const Cost reduced = arc_cost(net, a) + potential[u] - potential[v];
        if (reduced < 0) throw std::logic_error("negative reduced cost in shortest path step");
        const Cost cand = d + reduced;
        if (cand < dist[v]) {
          dist[v] = cand;
          pred[v] = a;
          heap.push({cand, v});
        }
      });
    }
    if (dist[sink] == kInf) return;
    for (int v = 0; v < n; ++v) {
      if (dist[v] != kInf) potential[v] += dist[v];
    }
    std::vector<ArcRef> path;
    for (int v = sink; v != source; v = arc_tail(net, pred[v])) path.push_back(pred[v]);
    const Units delta = path_bottleneck(net, flow, path);
    for (ArcRef a : path) push_along(flow, a, delta);
    ++stats.augmentations;
  }
}

struct FeasibleStart {
  Flow flow;
  std::int64_t augmentations = 0;
};

// A flow on st.network that meets every interior lower bound, or
// InfeasibleError. Zero when there are no lower bounds.
//
// A return edge t -> s turns the s-t network into a circulation; its lower
// bounds are then shifted into balances and those balances are satisfied by
// a max flow between a fresh source and sink.
FeasibleStart feasible_start(const StNetwork& st, SolverKind kind) {
  FeasibleStart out;
  out.flow = Flow(static_cast<std::size_t>(st.network.edge_count()));
  if (!st.network.has_lower_bounds()) return out;

  FlowNetwork circulation = st.network;
  Units unbounded = 1;
  for (const Edge& e : st.network.edges()) unbounded = checked_add(unbounded, e.capacity);
  circulation.add_edge(st.sink, st.source, unbounded, 0);

  const LowerBoundTransform shifted = lower_bound_transform(circulation);
  const StNetwork phase = build_st_transform(shifted.network);
  const Units required = shifted.network.total_supply();

  Flow phase_flow(static_cast<std::size_t>(phase.network.edge_count()));
  SolveStats phase_stats;
  if (kind == SolverKind::cycle_canceling) {
    phase_stats.augmentations = augment_to_max_flow(phase.network, phase.source, phase.sink, phase_flow);
  } else {
    ssp_augment(phase.network, phase.source, phase.sink, phase_flow, phase_stats);
  }
  const std::vector<Units> out_of = net_outflow(phase.network, phase_flow);
  const Units achieved = out_of[phase.source];
  if (achieved < required) {
    throw InfeasibleError("lower bounds cannot be met: " + std::to_string(required) +
                              " units are forced through bounded edges but only " + std::to_string(achieved) +
                              " can be routed",
                          required, achieved);
  }
  Flow interior(std::vector<Units>(phase_flow.values.begin(),
                                   phase_flow.values.begin() + circulation.edge_count()));
  const Flow restored = restore_lower_bounds(circulation, interior);
  out.flow.values.assign(restored.values.begin(), restored.values.begin() + st.network.edge_count());
  out.augmentations = phase_stats.augmentations;
  return out;
}

MinCostFlowResult finish(const FlowNetwork& net, StNetwork st, Flow st_flow, SolveStats stats, Clock::time_point t0) {
  MinCostFlowResult result;
  result.value = net_outflow(st.network, st_flow)[st.source];
  result.flow = Flow(std::vector<Units>(st_flow.values.begin(), st_flow.values.begin() + st.original_edge_count));
  result.cost = flow_cost(net, result.flow);
  result.st = std::move(st);
  result.st_flow = std::move(st_flow);
  stats.final_flow_value = result.value;
  stats.final_cost = result.cost;
  stats.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0);
  result.stats = std::move(stats);
  return result;
}

}  // namespace

std::optional<AugmentingPath> find_augmenting_path(const FlowNetwork& net, int source, int sink, const Flow& flow) {
  const Incidence inc(net);
  auto path = bfs_path(net, inc, source, sink, flow);
  if (!path) return std::nullopt;
  AugmentingPath out;
  out.bottleneck = path_bottleneck(net, flow, *path);
  for (ArcRef a : *path) {
    out.arcs.push_back({arc_tail(net, a), arc_head(net, a), arc_residual(net, flow, a), arc_cost(net, a), a.edge,
                        a.forward});
  }
  return out;
}

std::int64_t augment_to_max_flow(const FlowNetwork& net, int source, int sink, Flow& flow) {
  const Incidence inc(net);
  std::int64_t count = 0;
  while (auto path = bfs_path(net, inc, source, sink, flow)) {
    const Units delta = path_bottleneck(net, flow, *path);
    for (ArcRef a : *path) push_along(flow, a, delta);
    ++count;
  }
  return count;
}

MaxFlowResult max_flow(const StNetwork& st) {
  const auto t0 = Clock::now();
  if (st.network.has_lower_bounds()) throw InputError("max_flow requires zero lower bounds");
  MaxFlowResult out;
  out.flow = Flow(static_cast<std::size_t>(st.network.edge_count()));
  out.stats.augmentations = augment_to_max_flow(st.network, st.source, st.sink, out.flow);
  out.value = net_outflow(st.network, out.flow)[st.source];
  out.stats.final_flow_value = out.value;
  out.stats.final_cost = flow_cost(st.network, out.flow);
  out.stats.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0);
  return out;
}

std::optional<NegativeCycle> find_negative_cycle(const ResidualGraph& res) {
  const int n = res.node_count;
  if (n == 0 || res.arcs.empty()) return std::nullopt;
  std::vector<Cost> dist(static_cast<std::size_t>(n), 0);
  std::vector<int> pred(static_cast<std::size_t>(n), -1);
  std::vector<int> mark(static_cast<std::size_t>(n));

  for (int pass = 0; pass <= n + 1; ++pass) {
    bool changed = false;
    for (int i = 0; i < static_cast<int>(res.arcs.size()); ++i) {
      const ResidualArc& a = res.arcs[i];
      const Cost cand = dist[a.tail] + a.cost;
      if (cand < dist[a.head]) {
        dist[a.head] = cand;
        pred[a.head] = i;
        changed = true;
      }
    }
    if (!changed) return std::nullopt;

    // Any cycle among predecessor links has negative cost.
    std::fill(mark.begin(), mark.end(), -1);
    for (int start = 0; start < n; ++start) {
      if (mark[start] != -1) continue;
      int u = start;
      while (u != -1 && mark[u] == -1) {
        mark[u] = start;
        u = pred[u] == -1 ? -1 : res.arcs[pred[u]].tail;
      }
      if (u == -1 || mark[u] != start) continue;

      NegativeCycle cycle;
      cycle.bottleneck = std::numeric_limits<Units>::max();
      int v = u;
      do {
        const int arc = pred[v];
        cycle.arcs.push_back(arc);
        cycle.total_cost += res.arcs[arc].cost;
        cycle.bottleneck = std::min(cycle.bottleneck, res.arcs[arc].residual);
        v = res.arcs[arc].tail;
      } while (v != u);
      std::reverse(cycle.arcs.begin(), cycle.arcs.end());
      if (cycle.total_cost >= 0) throw std::logic_error("predecessor cycle with non-negative cost");
      return cycle;
    }
  }
  throw std::logic_error("Bellman-Ford did not settle");
}

CancelResult cancel_cycles(const FlowNetwork& net, Flow f) {
  const auto t0 = Clock::now();
  const ValidationReport report = validate_flow(net, f);
  if (!report.ok()) throw InputError("cancel_cycles needs a feasible flow: " + report.violations.front().describe());

  CancelResult out;
  Cost cost = flow_cost(net, f);
  out.stats.cost_trace.push_back(cost);
  for (;;) {
    const ResidualGraph res = residual_graph(net, f);
    const auto cycle = find_negative_cycle(res);
    if (!cycle) break;
    for (int idx : cycle->arcs) {
      const ResidualArc& a = res.arcs[idx];
      push_along(f, ArcRef{a.edge, a.forward}, cycle->bottleneck);
    }
    cost = checked_add(cost, checked_mul(cycle->bottleneck, cycle->total_cost));
    out.stats.cost_trace.push_back(cost);
    ++out.stats.cycles_canceled;
  }
  out.stats.certified = true;
  out.stats.final_cost = cost;
  out.stats.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0);
  out.flow = std::move(f);
  return out;
}

namespace {
std::atomic<std::int64_t> g_solves{0};
std::atomic<std::int64_t> g_certified{0};

void audit(const SolveStats& stats) {
  ++g_solves;
  if (stats.certified) ++g_certified;
}
}  // namespace

SolveAudit solve_audit() { return {g_solves.load(), g_certified.load()}; }

MinCostFlowResult min_cost_flow(const FlowNetwork& net) {
  const auto t0 = Clock::now();
  StNetwork st = detail::embed_st(net);
  FeasibleStart start = feasible_start(st, SolverKind::cycle_canceling);
  Flow flow = std::move(start.flow);
  SolveStats stats;
  stats.augmentations = start.augmentations + augment_to_max_flow(st.network, st.source, st.sink, flow);
  const Units value = net_outflow(st.network, flow)[st.source];

  CancelResult canceled = cancel_cycles(st.with_flow_value(value), std::move(flow));
  stats.cycles_canceled = canceled.stats.cycles_canceled;
  stats.cost_trace = std::move(canceled.stats.cost_trace);
  stats.certified = canceled.stats.certified;
  MinCostFlowResult result = finish(net, std::move(st), std::move(canceled.flow), std::move(stats), t0);
  audit(result.stats);
  return result;
}

MinCostFlowResult successive_shortest_paths(const FlowNetwork& net) {
  const auto t0 = Clock::now();
  for (const Edge& e : net.edges()) {
    if (e.cost < 0) throw InputError("successive_shortest_paths requires non-negative edge costs");
  }
  StNetwork st = detail::embed_st(net);
  FeasibleStart start = feasible_start(st, SolverKind::successive_shortest_paths);
  Flow flow = std::move(start.flow);
  SolveStats stats;
  stats.augmentations = start.augmentations;
  ssp_augment(st.network, st.source, st.sink, flow, stats);
  MinCostFlowResult result = finish(net, std::move(st), std::move(flow), std::move(stats), t0);
  result.stats.certified = !optimality_certificate(result).has_value();
  audit(result.stats);
  return result;
}

MinCostFlowResult solve(const FlowNetwork& net, SolverKind kind) {
  return kind == SolverKind::cycle_canceling ? min_cost_flow(net) : successive_shortest_paths(net);
}

std::optional<NegativeCycle> optimality_certificate(const MinCostFlowResult& result) {
  return find_negative_cycle(residual_graph(result.st.with_flow_value(result.value), result.st_flow));
}

namespace {

class Enumerator {
 public:
  Enumerator(const FlowNetwork& net, std::int64_t budget)
      : net_(net),
        budget_(budget),
        lo_(static_cast<std::size_t>(net.node_count())),
        hi_(static_cast<std::size_t>(net.node_count())),
        out_(static_cast<std::size_t>(net.node_count()), 0),
        rem_min_(static_cast<std::size_t>(net.node_count()), 0),
        rem_max_(static_cast<std::size_t>(net.node_count()), 0),
        x_(static_cast<std::size_t>(net.edge_count())) {
    for (int v = 0; v < net.node_count(); ++v) {
      lo_[v] = std::min<Units>(0, net.balance(v));
      hi_[v] = std::max<Units>(0, net.balance(v));
    }
    for (const Edge& e : net.edges()) {
      rem_min_[e.tail] += e.lower_bound;
      rem_max_[e.tail] += e.capacity;
      rem_min_[e.head] -= e.capacity;
      rem_max_[e.head] -= e.lower_bound;
    }
  }

  std::optional<BruteForceResult> run() {
    for (int v = 0; v < net_.node_count(); ++v) {
      if (!node_ok(v)) return std::nullopt;
    }
    recurse(0, 0);
    return best_;
  }

 private:
  bool node_ok(int v) const { return out_[v] + rem_max_[v] >= lo_[v] && out_[v] + rem_min_[v] <= hi_[v]; }

  void recurse(int k, Cost cost) {
    if (k == net_.edge_count()) {
      Units value = 0;
      for (int v = 0; v < net_.node_count(); ++v) {
        if (net_.balance(v) > 0) value += out_[v];
      }
      if (!best_ || value > best_->value || (value == best_->value && cost < best_->cost)) {
        best_ = BruteForceResult{value, cost, Flow(x_)};
      }
      return;
    }
    const Edge& e = net_.edge(k);
    rem_min_[e.tail] -= e.lower_bound;
    rem_max_[e.tail] -= e.capacity;
    rem_min_[e.head] += e.capacity;
    rem_max_[e.head] += e.lower_bound;
    for (Units x = e.lower_bound; x <= e.capacity; ++x) {
      if (++visited_ > budget_) {
        throw DomainError("instance too large for exhaustive enumeration", "too_large");
      }
      out_[e.tail] += x;
      out_[e.head] -= x;
      x_[k] = x;
      if (node_ok(e.tail) && node_ok(e.head)) recurse(k + 1, cost + x * e.cost);
      out_[e.tail] -= x;
      out_[e.head] += x;
    }
    x_[k] = 0;
    rem_min_[e.tail] += e.lower_bound;
    rem_max_[e.tail] += e.capacity;
    rem_min_[e.head] -= e.capacity;
    rem_max_[e.head] -= e.lower_bound;
  }

  const FlowNetwork& net_;
  std::int64_t budget_;
  std::int64_t visited_ = 0;
  std::vector<Units> lo_, hi_, out_, rem_min_, rem_max_;
  std::vector<Units> x_;
  std::optional<BruteForceResult> best_;
};

}  // namespace

std::optional<BruteForceResult> brute_force_min_cost(const FlowNetwork& net, std::int64_t state_budget) {
  return Enumerator(net, state_budget).run();
}

const char* to_string(SolverKind kind) {
  return kind == SolverKind::cycle_canceling ? "cycle-canceling" : "successive-shortest-paths";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "cycle-canceling") return SolverKind::cycle_canceling;
  if (name == "successive-shortest-paths") return SolverKind::successive_shortest_paths;
  throw InputError("unknown solver '" + name + "' (expected cycle-canceling or successive-shortest-paths)");
}

}  // namespace timberflow
