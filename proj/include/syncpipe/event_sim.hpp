#pragma once

#include <vector>

#include "syncpipe/model.hpp"
#include "syncpipe/scheduler.hpp"

namespace syncpipe {

/// Input of the list-scheduling engine shared by PE and the GPipe baseline.
struct ListScheduleInput {
  int stage_count = 1;
  int microbatches = 1;
  std::vector<Block> blocks;                      // J
  std::vector<double> durations;                  // per J slot
  std::vector<std::vector<OrderEntry>> queues;    // U_s per stage
  std::vector<std::vector<OrderEntry>> channel_queues;  // per channel n -> n + 1
  std::vector<double> allreduce;                  // A_s per stage
  std::vector<bool> replicated;                   // per stage
  bool forward_barrier = false;
};

/// Runs the event loop. Simultaneous completions are handled channels first,
/// then by ascending stage/channel index, then ascending microbatch.
/// Throws DeadlockError if work remains but nothing can start.
Schedule run_list_schedule(const ListScheduleInput& input);

}  // namespace syncpipe
