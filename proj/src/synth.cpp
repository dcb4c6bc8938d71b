#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "timberflow/csv.hpp"
#include "timberflow/error.hpp"
#include "timberflow/scenario.hpp"

namespace timberflow {

namespace {

// Distribution helpers built on the raw engine output only, so files are
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double normal() {
    const double u1 = 1.0 - unit(), u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }
  // Index drawn with probability proportional to the increments of `cumulative`.
  std::size_t pick(const std::vector<double>& cumulative) {
    const double x = unit() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
  }

 private:
  std::mt19937_64 engine_;
};

std::string padded(char prefix, std::int64_t n, int width) {
  std::string digits = std::to_string(n);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

int width_for(std::int64_t count) { return std::max(3, static_cast<int>(std::to_string(count).size())); }

struct LandUse {
  const char* name;
  double share;
  double yield_lo;
  double yield_hi;
};

constexpr LandUse kLandUses[] = {
    {"khair_forest", 0.35, 25, 45},
    {"agroforestry", 0.30, 10, 25},
    {"orchard", 0.20, 5, 12},
    {"fallow", 0.15, 3, 6},
};

}  // namespace

SynthOutput synth_instance(const SynthParams& p) {
  if (p.villages <= 0) throw InputError("synth: villages must be > 0");
  if (p.traders <= 0) throw InputError("synth: traders must be > 0");
  if (p.farms < 0 || p.transactions < 0) throw InputError("synth: farms and transactions must be >= 0");
  if (!(p.extent_m > 0) || !(p.grid_spacing_m > 0) || p.grid_spacing_m > p.extent_m) {
    throw InputError("synth: need 0 < grid_spacing_m <= extent_m");
  }
  if (!(p.external_share >= 0 && p.external_share <= 1)) throw InputError("synth: external_share must be in [0, 1]");
  if (!(p.decay_m > 0) || !(p.noise >= 0)) throw InputError("synth: decay_m must be > 0 and noise >= 0");

  Rng rng(p.seed);
  SynthOutput out;
  const double L = p.extent_m;

  // Fine roads: jittered grid with a few diagonals.
  const int cols = static_cast<int>(std::floor(L / p.grid_spacing_m)) + 1;
  std::vector<Point> grid;
  std::ostringstream roads;
  roads << "crs,metres\nnode_id,x,y\n";
  for (int r = 0; r < cols; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double jx = rng.uniform(-0.2, 0.2) * p.grid_spacing_m, jy = rng.uniform(-0.2, 0.2) * p.grid_spacing_m;
      const Point pt{std::clamp(c * p.grid_spacing_m + jx, 0.0, L), std::clamp(r * p.grid_spacing_m + jy, 0.0, L)};
      grid.push_back({std::round(pt.x * 10) / 10, std::round(pt.y * 10) / 10});
      roads << grid.size() << ',' << format_fixed(grid.back().x, 1) << ',' << format_fixed(grid.back().y, 1) << '\n';
    }
  }
  roads << "edge,node_a,node_b,length_m,resolution\n";
  int edge_no = 0;
  auto road_edge = [&](std::ostringstream& os, std::int64_t a, std::int64_t b, Point pa, Point pb, double lo,
                       double hi, const char* res) {
    const double len = std::max(1.0, distance(pa, pb) * rng.uniform(lo, hi));
    os << 'e' << ++edge_no << ',' << a << ',' << b << ',' << format_fixed(len, 1) << ',' << res << '\n';
  };
  for (int r = 0; r < cols; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int i = r * cols + c;
      if (c + 1 < cols) road_edge(roads, i + 1, i + 2, grid[i], grid[i + 1], 1.0, 1.25, "fine");
      if (r + 1 < cols) road_edge(roads, i + 1, i + cols + 1, grid[i], grid[i + cols], 1.0, 1.25, "fine");
      if (r + 1 < cols && c + 1 < cols && rng.unit() < 0.1) {
        road_edge(roads, i + 1, i + cols + 2, grid[i], grid[i + cols + 1], 1.0, 1.15, "fine");
      }
    }
  }
  out.files["roads.csv"] = roads.str();

  // Villages inside the district.
  std::vector<Point> village_pos;
  std::ostringstream villages;
  villages << "village_id,x,y\n";
  const int vw = width_for(p.villages);
  for (int v = 0; v < p.villages; ++v) {
    village_pos.push_back({std::round(rng.uniform(0.03, 0.97) * L), std::round(rng.uniform(0.03, 0.97) * L)});
    villages << padded('V', v + 1, vw) << ',' << format_fixed(village_pos[v].x, 1) << ','
             << format_fixed(village_pos[v].y, 1) << '\n';
  }
  out.files["villages.csv"] = villages.str();

  // Traders: most inside, the rest beyond the border on coarse roads.
  const int external = static_cast<int>(std::llround(p.external_share * p.traders));
  std::vector<Point> trader_pos;
  std::ostringstream traders, coarse;
  traders << "trader_id,x,y\n";
  coarse << "crs,metres\nnode_id,x,y\n";
  std::ostringstream coarse_edges;
  coarse_edges << "edge,node_a,node_b,length_m,resolution\n";
  std::int64_t coarse_id = 100000;
  const int tw = width_for(p.traders);
  for (int t = 0; t < p.traders; ++t) {
    Point pt;
    if (t >= p.traders - external) {
      const int side = static_cast<int>(rng.integer(0, 3));
      const double out_m = rng.uniform(15000, 60000), along = rng.uniform(0.1, 0.9) * L;
      const Point border = side == 0 ? Point{0, along} : side == 1 ? Point{L, along} : side == 2 ? Point{along, 0}
                                                                                                  : Point{along, L};
      pt = side == 0 ? Point{-out_m, along} : side == 1 ? Point{L + out_m, along} : side == 2 ? Point{along, -out_m}
                                                                                             : Point{along, L + out_m};
      pt = {std::round(pt.x), std::round(pt.y)};
      // Chain of coarse nodes from the trader to the fine node nearest the border point.
      std::size_t attach = 0;
      for (std::size_t g = 1; g < grid.size(); ++g) {
        if (distance(grid[g], border) < distance(grid[attach], border)) attach = g;
      }
      const int hops = std::max(1, static_cast<int>(std::ceil(distance(pt, grid[attach]) / 8000.0)));
      std::int64_t prev_id = 0;
      Point prev{};
      for (int h = 0; h <= hops; ++h) {
        const double f = static_cast<double>(h) / hops;
        Point q{pt.x + (grid[attach].x - pt.x) * f, pt.y + (grid[attach].y - pt.y) * f};
        if (h > 0 && h < hops) {
          q.x = std::round(q.x + rng.uniform(-800, 800));
          q.y = std::round(q.y + rng.uniform(-800, 800));
        }
        const std::int64_t id = ++coarse_id;
        coarse << id << ',' << format_fixed(q.x, 1) << ',' << format_fixed(q.y, 1) << '\n';
        if (h > 0) road_edge(coarse_edges, prev_id, id, prev, q, 1.05, 1.2, "coarse");
        prev_id = id;
        prev = q;
      }
    } else {
      pt = {std::round(rng.uniform(0.02, 0.98) * L), std::round(rng.uniform(0.02, 0.98) * L)};
    }
    trader_pos.push_back(pt);
    traders << padded('T', t + 1, tw) << ',' << format_fixed(pt.x, 1) << ',' << format_fixed(pt.y, 1) << '\n';
  }
  out.files["traders.csv"] = traders.str();
  if (external > 0) out.files["roads_coarse.csv"] = coarse.str() + coarse_edges.str();

  // Land-use yields (ground truth).
  std::vector<double> land_cumulative;
  std::vector<double> true_yield;
  std::ostringstream truth;
  truth << "land_use_type,trees_per_ha\n";
  for (const LandUse& lu : kLandUses) {
    land_cumulative.push_back((land_cumulative.empty() ? 0.0 : land_cumulative.back()) + lu.share);
    true_yield.push_back(std::round(rng.uniform(lu.yield_lo, lu.yield_hi) * 100) / 100);
    out.true_yields[lu.name] = true_yield.back();
    truth << lu.name << ',' << format_fixed(true_yield.back(), 2) << '\n';
  }
  out.yields_truth_csv = truth.str();

  // Farms: every village gets one before the rest are spread by village size.
  std::vector<double> village_cumulative;
  for (int v = 0; v < p.villages; ++v) {
    village_cumulative.push_back((v ? village_cumulative.back() : 0.0) + rng.lognormal(0, 0.5));
  }
  struct FarmRow {
    int village;
    int land;
    double area;
  };
  std::vector<FarmRow> farms;
  std::ostringstream farm_csv;
  farm_csv << "farm_id,village_id,land_use_type,area_ha\n";
  const int fw = width_for(p.farms);
  for (int f = 0; f < p.farms; ++f) {
    const int v = f < p.villages ? f : static_cast<int>(rng.pick(village_cumulative));
    const int land = static_cast<int>(rng.pick(land_cumulative));
    const double area = std::max(0.05, std::round(std::clamp(rng.lognormal(0.2, 0.6), 0.1, 15.0) * 100) / 100);
    farms.push_back({v, land, area});
    farm_csv << padded('F', f + 1, fw) << ',' << padded('V', v + 1, vw) << ',' << kLandUses[land].name << ','
             << format_fixed(area, 2) << '\n';
  }
  out.files["farms.csv"] = farm_csv.str();

  // Transactions: one per farm first (while they last), the rest by farm area.
  std::vector<int> txn_farm;
  std::vector<double> area_cumulative;
  for (const auto& f : farms) area_cumulative.push_back((area_cumulative.empty() ? 0.0 : area_cumulative.back()) + f.area);
  for (int x = 0; x < p.transactions; ++x) {
    if (farms.empty()) break;
    txn_farm.push_back(x < static_cast<int>(farms.size()) ? x : static_cast<int>(rng.pick(area_cumulative)));
  }
  std::vector<std::vector<int>> by_farm(farms.size());
  for (std::size_t x = 0; x < txn_farm.size(); ++x) by_farm[txn_farm[x]].push_back(static_cast<int>(x));
  std::vector<Units> txn_trees(txn_farm.size(), 0);
  for (std::size_t f = 0; f < farms.size(); ++f) {
    const auto& txns = by_farm[f];
    if (txns.empty()) continue;
    const Units total = std::max<Units>(static_cast<Units>(txns.size()),
                                        std::llround(true_yield[farms[f].land] * farms[f].area * rng.uniform(0.7, 1.3)));
    // Split with random weights; each transaction keeps at least one tree.
    std::vector<double> w;
    double wsum = 0;
    for (std::size_t i = 0; i < txns.size(); ++i) wsum += w.emplace_back(rng.uniform(0.2, 1.0));
    Units left = total - static_cast<Units>(txns.size());
    for (std::size_t i = 0; i < txns.size(); ++i) {
      const Units extra = i + 1 == txns.size() ? left : static_cast<Units>(std::floor(static_cast<double>(total - static_cast<Units>(txns.size())) * w[i] / wsum));
      txn_trees[txns[i]] = 1 + std::min(extra, left);
      left -= std::min(extra, left);
    }
  }

  // Historical trader choice: attractiveness times distance decay, so villages
  // spread their sales well beyond the nearest trader.
  std::vector<double> attract;
  for (int t = 0; t < p.traders; ++t) attract.push_back(rng.lognormal(0, p.noise));
  std::vector<std::vector<double>> choice(p.villages);
  for (int v = 0; v < p.villages; ++v) {
    double acc = 0;
    for (int t = 0; t < p.traders; ++t) {
      acc += attract[t] * std::exp(-distance(village_pos[v], trader_pos[t]) / p.decay_m);
      choice[v].push_back(acc);
    }
  }
  std::ostringstream txn_csv;
  txn_csv << "txn_id,village_id,trader_id,trees_harvested,trees_uprooted,volume_m3,farm_id\n";
  const int xw = width_for(p.transactions);
  for (std::size_t x = 0; x < txn_farm.size(); ++x) {
    const FarmRow& f = farms[txn_farm[x]];
    const int t = static_cast<int>(rng.pick(choice[f.village]));
    const Units trees = txn_trees[x];
    const Units uprooted = static_cast<Units>(std::floor(trees * rng.uniform(0.0, 0.35)));
    const double volume = trees * rng.uniform(0.08, 0.3);
    txn_csv << padded('X', static_cast<std::int64_t>(x) + 1, xw) << ',' << padded('V', f.village + 1, vw) << ','
            << padded('T', t + 1, tw) << ',' << trees << ',' << uprooted << ',' << format_fixed(volume, 3) << ','
            << padded('F', txn_farm[x] + 1, fw) << '\n';
  }
  out.files["transactions.csv"] = txn_csv.str();
  return out;
}

void write_synth(const std::filesystem::path& dir, const SynthOutput& out) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, bytes] : out.files) write_file(dir / name, bytes);
  write_file(dir / "yields_truth.csv", out.yields_truth_csv);
}

}  // namespace timberflow
