#pragma once

#include <optional>
#include <vector>

#include "syncpipe/model.hpp"
#include "syncpipe/ordering.hpp"
#include "syncpipe/partition.hpp"

namespace syncpipe {

struct SweepRow {
  int stages = 0;
  bool feasible = false;
  double w = kInfeasible;         // W(xi), the partition objective
  int replication = 0;            // r of the last stage
  double makespan = kInfeasible;  // T_PE(xi)
  double lemma1 = kInfeasible;    // pipeline upper bound on T_PE for that plan
};

struct SppResult {
  Plan best_plan;
  Schedule best_schedule;
  double makespan = kInfeasible;
  int best_stages = 0;
  DeviceOrdering ordering;
  std::vector<SweepRow> sweep;
  double phi = 0.0;
  double theorem1_factor = 0.0;  // (2 + (4V - 4) / M)(1 + phi)
};

/// Full planner: order devices, sweep the stage count 1..V, partition each with
/// the DP, simulate each candidate, keep the fastest (fewer stages on ties).
SppResult spp(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches);

/// Plan and simulate a single stage count. Throws InfeasibleError when
/// `stages` exceeds L or V.
SppResult spp_fixed_stages(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                           int stages);

struct Theorem1Report {
  double factor = 0.0;
  double phi = 0.0;
  std::optional<double> t_star;
  std::optional<double> ratio;  // t_spp / t_star
  std::optional<bool> holds;    // ratio <= factor
};

Theorem1Report theorem1_report(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                               double t_spp, std::optional<double> t_star = std::nullopt);

}  // namespace syncpipe
