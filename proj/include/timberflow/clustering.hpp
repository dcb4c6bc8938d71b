#pragma once

#include <string>
#include <vector>

#include "timberflow/market.hpp"

namespace timberflow {

inline constexpr int kDemandClasses = 5;

// "very-low" .. "very-high" for k = 5, "class-1" .. "class-k" otherwise.
std::vector<std::string> class_labels(int k);

struct WardMerge {
  int a = 0;  // cluster ids: 0..n-1 are traders, n + i is the cluster made by merge i
  int b = 0;
  int size = 0;
  // Increase in within-cluster sum of squares, as the exact fraction num / den.
  unsigned __int128 num = 0;
  unsigned __int128 den = 1;
  double height = 0;  // sqrt(2 * increase), the usual Ward dendrogram height
};

struct DemandClass {
  std::string label;
  std::vector<int> members;  // trader indices, ascending
  Units total = 0;           // sum of the clustering feature
  double mean() const { return members.empty() ? 0.0 : static_cast<double>(total) / members.size(); }
};

struct ClusterModel {
  int k = kDemandClasses;
  std::vector<int> class_of;          // per trader, index into classes
  std::vector<DemandClass> classes;   // ascending mean
  std::vector<WardMerge> merges;      // full dendrogram, n - 1 merges
};

// Ward agglomeration on one integer value per trader. Merge costs are compared
// exactly; equal costs go to the pair whose smallest member indices are lowest.
ClusterModel cluster_traders(const std::vector<Units>& values, int k = kDemandClasses);

// True when every merge cost is >= the previous one (exact comparison).
bool merges_monotone(const std::vector<WardMerge>& merges);

struct ModeratedDemands {
  std::vector<Units> permits;        // per trader
  std::vector<Units> class_totals;   // sum of original demands per class, == sum of permits
};

// Each trader gets its class mean demand; the remainder of the integer division
// goes one tree at a time to the lowest trader indices in the class.
ModeratedDemands moderate_demands(const ClusterModel& model, const std::vector<Units>& demands);

enum class ClusterFeature { trees, volume };

// Trees per trader, or litres per trader when clustering by volume.
std::vector<Units> cluster_feature(const MarketInstance& inst, ClusterFeature feature);

struct ClusteredResult {
  ClusterModel model;
  ModeratedDemands moderated;
  MarketSolution baseline;
  MarketSolution clustered;
};

ClusteredResult clustered_optimize(const MarketInstance& inst, const std::vector<Units>& supplies,
                                   ClusterFeature feature = ClusterFeature::trees,
                                   SolverKind solver = SolverKind::cycle_canceling);

// trader_id,cluster_label,original_demand,permit
std::string format_cluster_table(const MarketInstance& inst, const ClusterModel& model,
                                 const std::vector<Units>& demands, const ModeratedDemands& moderated);

}  // namespace timberflow
