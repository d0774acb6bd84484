#pragma once

#include <cstdint>
#include <vector>

#include "syncpipe/model.hpp"

namespace syncpipe {

// Exhaustive ground truth for tiny instances. Everything here is exponential
// and refuses inputs outside OracleLimits rather than approximating.

struct OracleLimits {
  int max_layers = 4;
  int max_gpus = 4;
  int max_microbatches = 3;
  std::int64_t node_budget = 50'000'000;
  // Also enumerate plans that leave some GPUs idle. Off by default: in the
  // pipeline model every GPU hosts one stage or one replica.
  bool allow_idle_gpus = false;
};

/// Throws OracleLimitError if the instance exceeds `limits`.
void check_oracle_limits(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                         const OracleLimits& limits);

/// All interval partitions of layers 1..L into `stages` contiguous groups,
/// as lists of (first, last) pairs.
std::vector<std::vector<std::pair<int, int>>> interval_partitions(int layers, int stages);

/// Every plan: all interval partitions, all stage counts, all assignments of
/// disjoint non-empty GPU sets to stages (any GPU, not only contiguous ones).
std::vector<Plan> enumerate_plans(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                                  const OracleLimits& limits);

struct WStar {
  double w = 0.0;
  Plan plan;
  std::size_t plans = 0;
};

/// Minimum over all enumerated plans of the all-microbatch workload W.
WStar brute_force_w_star(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                         const OracleLimits& limits = {});

struct OptimalSchedule {
  bool improved = false;  // found a schedule strictly below `upper_bound`
  double makespan = 0.0;
  Schedule schedule;
  std::int64_t nodes = 0;
};

/// Branch and bound over active schedules of one plan. The last stage's
/// forward and backward are separate operations; stages and channels are
/// exclusive resources; AllReduce starts when a stage's last backward ends.
/// Only schedules strictly faster than `upper_bound` are reported.
OptimalSchedule optimal_schedule(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster,
                                 double upper_bound, std::int64_t node_budget);

struct TStar {
  double makespan = 0.0;
  Plan plan;
  Schedule schedule;
  std::size_t plans = 0;
  std::int64_t nodes = 0;
};

/// Optimal makespan over every enumerated plan and every feasible schedule.
TStar brute_force_t_star(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                         const OracleLimits& limits = {});

}  // namespace syncpipe
