#pragma once

#include <string>
#include <vector>

#include "syncpipe/cost.hpp"
#include "syncpipe/model.hpp"

namespace syncpipe {

/// Ordered block list J for a pipeline of `stage_count` stages:
/// F_1, X_1, F_2, ..., X_{N-1}, FB_N, Y_{N-1}, B_{N-1}, ..., Y_1, B_1.
std::vector<Block> build_block_list(int stage_count);

struct OrderEntry {
  int microbatch = 0;
  int position = 0;  // slot in J
  friend bool operator==(const OrderEntry&, const OrderEntry&) = default;
};

/// Per-stage execution order queues U_s (index n - 1), and the transfer
/// order of each channel in the same pass sequence.
struct ExecutionOrder {
  std::vector<std::vector<OrderEntry>> queues;
  std::vector<std::vector<OrderEntry>> channel_queues;
  int passes = 0;
};

/// Pass loop over the available-microbatch queues. Queue membership is
/// snapshotted at the start of each pass, so a microbatch advances at most one
/// block per pass; blocks are visited in J order within a pass.
ExecutionOrder compute_execution_order(int stage_count, int microbatches);
ExecutionOrder compute_execution_order(const Plan& plan);

/// Durations of every J slot for a plan, index position - 1.
std::vector<double> block_durations(const std::vector<Block>& blocks, const PlanCosts& costs);

/// Event-driven pipeline execution following the per-stage order queues.
/// A stage runs its queue head as soon as that microbatch finished the
/// preceding block and the stage is idle; channels serve transfers in pass
/// order the same way;
/// a replicated stage starts its AllReduce when its final queued block ends.
Schedule simulate_pe(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster);

struct Violation {
  std::string constraint;
  int microbatch = 0;  // 0 when not tied to one microbatch
  int stage = 0;       // stage or channel index, 0 when global
  std::string detail;
};

struct ScheduleCheckOptions {
  bool forward_barrier = false;  // no backward-phase block before every forward-phase block ended
};

/// Checks dependency constraints, AllReduce ordering, per-resource exclusivity,
/// durations, e^f_{1,s_1} = 0 and the makespan formula. Empty result = feasible.
std::vector<Violation> validate_schedule(const Schedule& schedule, const Plan& plan,
                                         const ModelProfile& profile, const ClusterGraph& cluster,
                                         ScheduleCheckOptions options = {});

/// Makespan of a schedule recomputed from its events: latest backward end on
/// stage 1 or AllReduce end.
double schedule_makespan(const Schedule& schedule, const PlanCosts& costs);

/// (1 + (4|S| - 4) / M) * M * C + max A_s over replicated stages.
double lemma1_bound(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster);

struct CycleSchedule {
  Schedule schedule;
  int cycles = 0;
};

/// Barrier-synchronised cycle execution of the same order: each cycle runs at
/// most one microbatch per block, the next cycle starts when all of them end.
CycleSchedule simulate_cycle_schedule(const Plan& plan, const ModelProfile& profile,
                                      const ClusterGraph& cluster);

}  // namespace syncpipe
