#pragma once

#include "syncpipe/model.hpp"
#include "syncpipe/ordering.hpp"

namespace syncpipe {

// Reference planners for comparison. All are synchronous (one barrier per
// iteration) and run under the same cost model as the main planner.

/// Equal layer counts per stage (remainder to the front), one GPU per stage,
/// stages on the first `stage_count` devices of `ordering`.
Plan gpipe_plan(const ModelProfile& profile, const DeviceOrdering& ordering, int stage_count,
                int microbatches);

/// All forward-phase work of every microbatch (F_n, X_n) finishes before any
/// backward-phase block (FB, Y, B) starts. Rejects replicated plans.
Schedule gpipe_schedule(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster);

/// Whole model replicated over every GPU.
Plan dataparallel_plan(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches);

struct NoReplicationResult {
  Plan plan;
  double w = 0.0;
};

/// Partition DP with replication disabled: min over xi of the min-max
/// workload with one GPU per stage on v_1..v_xi.
NoReplicationResult noreplication_plan(const ModelProfile& profile, const ClusterGraph& cluster,
                                       const DeviceOrdering& ordering, int microbatches);

}  // namespace syncpipe
