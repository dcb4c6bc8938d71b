#include "timberflow/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "timberflow/checked.hpp"
#include "timberflow/error.hpp"

namespace timberflow {

namespace {

using u128 = unsigned __int128;
using i128 = __int128;

// Sign of a/b - c/d without forming products.
int compare_fractions(u128 a, u128 b, u128 c, u128 d) {
  for (;;) {
    const u128 q1 = a / b, q2 = c / d;
    if (q1 != q2) return q1 < q2 ? -1 : 1;
    const u128 r1 = a % b, r2 = c % d;
    if (r1 == 0 || r2 == 0) return r1 == r2 ? 0 : (r1 == 0 ? -1 : 1);
    // r1/b vs r2/d has the same sign as d/r2 vs b/r1
    const u128 old_b = b;
    a = d;
    b = r2;
    c = old_b;
    d = r1;
  }
}

struct Group {
  int id;
  int key;  // smallest member index
  std::vector<int> members;
  Units sum = 0;
};

void ward_cost(const Group& x, const Group& y, u128& num, u128& den) {
  const i128 nx = static_cast<i128>(x.members.size()), ny = static_cast<i128>(y.members.size());
  i128 diff = ny * x.sum - nx * y.sum;
  if (diff < 0) diff = -diff;
  num = static_cast<u128>(diff) * static_cast<u128>(diff);
  den = static_cast<u128>(nx * ny * (nx + ny));
}

}  // namespace

std::vector<std::string> class_labels(int k) {
  if (k == 5) return {"very-low", "low", "medium", "high", "very-high"};
  std::vector<std::string> out;
  for (int i = 1; i <= k; ++i) out.push_back("class-" + std::to_string(i));
  return out;
}

ClusterModel cluster_traders(const std::vector<Units>& values, int k) {
  const int n = static_cast<int>(values.size());
  if (k < 1) throw InputError("number of classes must be >= 1");
  if (n < k) {
    throw DomainError("need at least " + std::to_string(k) + " traders to form " + std::to_string(k) +
                          " classes, have " + std::to_string(n),
                      "too_few_traders");
  }
  Units total = 0;
  for (Units v : values) {
    if (v < 0) throw InputError("clustering values must be >= 0");
    total = checked_add(total, v);
  }
  // Keeps |n_y * S_x - n_x * S_y| below 2^63, so its square fits in 128 bits.
  checked_mul(total, static_cast<Units>(n));

  std::vector<Group> active;
  active.reserve(n);
  for (int i = 0; i < n; ++i) active.push_back({i, i, {i}, values[i]});

  ClusterModel model;
  model.k = k;
  std::vector<Group> snapshot;
  if (n == k) snapshot = active;
  int next_id = n;
  while (active.size() > 1) {
    std::size_t bi = 0, bj = 1;
    u128 best_num = 0, best_den = 1;
    ward_cost(active[0], active[1], best_num, best_den);
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        u128 num, den;
        ward_cost(active[i], active[j], num, den);
        if (compare_fractions(num, den, best_num, best_den) < 0) {
          best_num = num;
          best_den = den;
          bi = i;
          bj = j;
        }
      }
    }
    Group& a = active[bi];
    Group& b = active[bj];
    WardMerge m;
    m.a = std::min(a.id, b.id);
    m.b = std::max(a.id, b.id);
    m.num = best_num;
    m.den = best_den;
    m.height = std::sqrt(2.0L * static_cast<long double>(best_num) / static_cast<long double>(best_den));
    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    std::sort(a.members.begin(), a.members.end());
    a.sum += b.sum;
    a.id = next_id++;
    m.size = static_cast<int>(a.members.size());
    model.merges.push_back(m);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    if (static_cast<int>(active.size()) == k) snapshot = active;
  }

  std::sort(snapshot.begin(), snapshot.end(), [](const Group& x, const Group& y) {
    const i128 lhs = static_cast<i128>(x.sum) * static_cast<i128>(y.members.size());
    const i128 rhs = static_cast<i128>(y.sum) * static_cast<i128>(x.members.size());
    return lhs != rhs ? lhs < rhs : x.key < y.key;
  });
  const auto labels = class_labels(k);
  model.class_of.assign(n, -1);
  for (int c = 0; c < k; ++c) {
    DemandClass dc;
    dc.label = labels[c];
    dc.members = snapshot[c].members;
    dc.total = snapshot[c].sum;
    for (int t : dc.members) model.class_of[t] = c;
    model.classes.push_back(std::move(dc));
  }
  return model;
}

bool merges_monotone(const std::vector<WardMerge>& merges) {
  for (std::size_t i = 1; i < merges.size(); ++i) {
    if (compare_fractions(merges[i].num, merges[i].den, merges[i - 1].num, merges[i - 1].den) < 0) return false;
  }
  return true;
}

ModeratedDemands moderate_demands(const ClusterModel& model, const std::vector<Units>& demands) {
  if (demands.size() != model.class_of.size()) throw InputError("demand vector does not match clustered traders");
  ModeratedDemands out;
  out.permits.assign(demands.size(), 0);
  for (const DemandClass& c : model.classes) {
    Units sum = 0;
    for (int t : c.members) sum = checked_add(sum, demands[t]);
    const Units count = static_cast<Units>(c.members.size());
    const Units base = sum / count;
    Units remainder = sum % count;
    for (int t : c.members) {  // members ascend, so the extra trees go to the lowest indices
      out.permits[t] = base + (remainder > 0 ? 1 : 0);
      if (remainder > 0) --remainder;
    }
    out.class_totals.push_back(sum);
  }
  return out;
}

std::vector<Units> cluster_feature(const MarketInstance& inst, ClusterFeature feature) {
  return feature == ClusterFeature::trees ? trader_demands(inst) : trader_volumes_litres(inst);
}

ClusteredResult clustered_optimize(const MarketInstance& inst, const std::vector<Units>& supplies,
                                   ClusterFeature feature, SolverKind solver) {
  ClusteredResult r;
  const std::vector<Units> demands = trader_demands(inst);
  r.model = cluster_traders(cluster_feature(inst, feature));
  r.moderated = moderate_demands(r.model, demands);
  r.baseline = solve_market(supplies, demands, inst.od, solver);
  r.clustered = solve_market(supplies, r.moderated.permits, inst.od, solver);
  return r;
}

std::string format_cluster_table(const MarketInstance& inst, const ClusterModel& model,
                                 const std::vector<Units>& demands, const ModeratedDemands& moderated) {
  std::ostringstream out;
  out << "trader_id,cluster_label,original_demand,permit\n";
  for (std::size_t t = 0; t < inst.traders.size(); ++t) {
    out << inst.traders[t].id << ',' << model.classes[model.class_of[t]].label << ',' << demands[t] << ','
        << moderated.permits[t] << '\n';
  }
  return out.str();
}

}  // namespace timberflow
