#include "syncpipe/baselines.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "syncpipe/cost.hpp"
#include "syncpipe/errors.hpp"
#include "syncpipe/event_sim.hpp"
#include "syncpipe/partition.hpp"
#include "syncpipe/scheduler.hpp"

namespace syncpipe {

Plan gpipe_plan(const ModelProfile& profile, const DeviceOrdering& ordering, int stage_count,
                int microbatches) {
  const int L = profile.layer_count();
  const int V = static_cast<int>(ordering.order.size());
  if (stage_count < 1 || stage_count > std::min(L, V)) {
    throw InfeasibleError(fmt::format("gpipe: {} stages for {} layers on {} gpus", stage_count, L, V));
  }
  Plan plan;
  plan.microbatch_count = microbatches;
  const int base = L / stage_count;
  const int extra = L % stage_count;
  int next = 1;
  for (int n = 1; n <= stage_count; ++n) {
    const int size = base + (n <= extra ? 1 : 0);
    plan.stages.push_back({n, next, next + size - 1, {ordering.order[n - 1]}});
    next += size;
  }
  return plan;
}

Schedule gpipe_schedule(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster) {
  if (!plan.replicated_stages().empty()) {
    throw ValidationError("replicated plan", "gpipe schedule expects one GPU per stage");
  }
  const PlanCosts costs = plan_costs(plan, profile, cluster);
  const int N = plan.stage_count();
  const int M = plan.microbatch_count;

  ListScheduleInput in;
  in.stage_count = N;
  in.microbatches = M;
  in.blocks = build_block_list(N);
  in.durations = block_durations(in.blocks, costs);
  in.allreduce = costs.allreduce;
  in.replicated.assign(N, false);
  in.forward_barrier = true;
  in.queues.resize(N);
  in.channel_queues.resize(N - 1);
  for (const Block& b : in.blocks) {
    auto& queues = b.is_compute() ? in.queues : in.channel_queues;
    for (int m = 1; m <= M; ++m) queues[b.index - 1].push_back({m, b.position});
  }
  return run_list_schedule(in);
}

Plan dataparallel_plan(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches) {
  Plan plan;
  plan.microbatch_count = microbatches;
  std::vector<GpuId> all = cluster.gpu_ids();
  std::sort(all.begin(), all.end());
  plan.stages.push_back({1, 1, profile.layer_count(), std::move(all)});
  return plan;
}

NoReplicationResult noreplication_plan(const ModelProfile& profile, const ClusterGraph& cluster,
                                       const DeviceOrdering& ordering, int microbatches) {
  PrmSolver solver(profile, cluster, ordering, microbatches, {.replication = false, .memoize = true});
  const int top = std::min(profile.layer_count(), cluster.size());
  NoReplicationResult best;
  best.w = kInfeasible;
  int best_xi = 0;
  for (int xi = 1; xi <= top; ++xi) {
    const double w = solver.w({profile.layer_count(), xi, 1, xi});
    if (w < best.w) {
      best.w = w;
      best_xi = xi;
    }
  }
  best.plan.microbatch_count = microbatches;
  best.plan.stages = solver.prm(profile.layer_count(), best_xi, best_xi, 1).stages;
  return best;
}

}  // namespace syncpipe
