#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "timberflow/flow_network.hpp"

namespace timberflow::testing {

// Villages 0..V-1, traders V..V+T-1, one edge per pair in village-major order.
inline FlowNetwork bipartite(const std::vector<Units>& supplies, const std::vector<Units>& demands,
                             const std::vector<std::vector<Cost>>& costs) {
  const int nv = static_cast<int>(supplies.size());
  const int nt = static_cast<int>(demands.size());
  FlowNetwork net(nv + nt);
  for (int v = 0; v < nv; ++v) net.set_balance(v, supplies[v]);
  for (int t = 0; t < nt; ++t) net.set_balance(nv + t, -demands[t]);
  for (int v = 0; v < nv; ++v) {
    for (int t = 0; t < nt; ++t) {
      net.add_edge(v, nv + t, std::min(supplies[v], demands[t]), costs[v][t]);
    }
  }
  return net;
}

inline std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

struct RandomBipartite {
  std::vector<Units> supplies;
  std::vector<Units> demands;
  std::vector<std::vector<Cost>> costs;
  FlowNetwork net;
};

inline RandomBipartite random_bipartite(std::mt19937_64& rng, int max_villages = 4, int max_traders = 3,
                                        Units max_amount = 6, Cost max_cost = 10) {
  RandomBipartite r;
  const int nv = static_cast<int>(uniform(rng, 1, max_villages));
  const int nt = static_cast<int>(uniform(rng, 1, max_traders));
  for (int v = 0; v < nv; ++v) r.supplies.push_back(uniform(rng, 0, max_amount));
  for (int t = 0; t < nt; ++t) r.demands.push_back(uniform(rng, 0, max_amount));
  r.costs.assign(static_cast<std::size_t>(nv), std::vector<Cost>(static_cast<std::size_t>(nt)));
  for (auto& row : r.costs) {
    for (auto& c : row) c = uniform(rng, 0, max_cost);
  }
  r.net = bipartite(r.supplies, r.demands, r.costs);
  return r;
}

// Random network with bounds and a flow that is feasible for it by
// construction (balances are read off the flow).
struct RandomFeasible {
  FlowNetwork net;
  Flow flow;
};

inline RandomFeasible random_feasible(std::mt19937_64& rng, int max_nodes = 6, int max_edges = 10,
                                      Units max_bound = 5, Cost max_cost = 10) {
  const int n = static_cast<int>(uniform(rng, 2, max_nodes));
  const int m = static_cast<int>(uniform(rng, 1, max_edges));
  RandomFeasible r;
  r.net = FlowNetwork(n);
  for (int i = 0; i < m; ++i) {
    int a = static_cast<int>(uniform(rng, 0, n - 1));
    int b = static_cast<int>(uniform(rng, 0, n - 2));
    if (b >= a) ++b;
    const Units lb = uniform(rng, 0, max_bound);
    const Units cap = uniform(rng, lb, max_bound);
    r.net.add_edge(a, b, cap, uniform(rng, 0, max_cost), lb);
    r.flow.values.push_back(uniform(rng, lb, cap));
  }
  std::vector<Units> out(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < m; ++i) {
    out[r.net.edge(i).tail] += r.flow[i];
    out[r.net.edge(i).head] -= r.flow[i];
  }
  for (int v = 0; v < n; ++v) r.net.set_balance(v, out[v]);
  return r;
}

}  // namespace timberflow::testing
