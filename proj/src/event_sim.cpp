#include "syncpipe/event_sim.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "syncpipe/errors.hpp"

namespace syncpipe {

namespace {

enum ResourceType { kChannel = 0, kStage = 1 };

// (end, resource type, resource index, microbatch, position, start)
using Completion = std::tuple<double, int, int, int, int, double>;

class Engine {
 public:
  explicit Engine(const ListScheduleInput& in)
      : in_(in),
        J_(static_cast<int>(in.blocks.size())),
        progress_(in.microbatches + 1, 0),
        stage_busy_(in.stage_count + 1, false),
        channel_busy_(in.stage_count, false),
        head_(in.stage_count + 1, 0),
        channel_head_(in.stage_count, 0) {
    for (const Block& b : in.blocks)
      if (b.forward_phase()) forward_left_ += in.microbatches;
    barrier_open_ = !in.forward_barrier || forward_left_ == 0;
  }

  Schedule run() {
    try_stage(1, 0.0);
    while (!pending_.empty()) {
      const Completion c = *pending_.begin();
      pending_.erase(pending_.begin());
      complete(c);
    }
    for (int n = 1; n < in_.stage_count; ++n) {
      if (channel_head_[n] != in_.channel_queues[n - 1].size()) {
        throw DeadlockError(fmt::format("channel {} stuck at queue entry {} of {}", n, channel_head_[n],
                                        in_.channel_queues[n - 1].size()));
      }
    }
    for (int n = 1; n <= in_.stage_count; ++n) {
      if (head_[n] != in_.queues[n - 1].size()) {
        throw DeadlockError(fmt::format("stage {} stuck at queue entry {} of {}", n, head_[n],
                                        in_.queues[n - 1].size()));
      }
    }
    for (int m = 1; m <= in_.microbatches; ++m) {
      if (progress_[m] != J_) {
        throw DeadlockError(fmt::format("microbatch {} finished {} of {} blocks", m, progress_[m], J_));
      }
    }

    std::sort(out_.events.begin(), out_.events.end(), [](const ScheduledEvent& a, const ScheduledEvent& b) {
      return std::tie(a.start, a.block.position, a.microbatch) <
             std::tie(b.start, b.block.position, b.microbatch);
    });
    double makespan = 0.0;
    for (const ScheduledEvent& e : out_.events)
      if (e.block.position == J_) makespan = std::max(makespan, e.end);
    for (const auto& [stage, start] : out_.allreduce_starts)
      makespan = std::max(makespan, start + in_.allreduce[stage - 1]);
    out_.makespan = makespan;
    return std::move(out_);
  }

 private:
  const Block& block_at(int position) const { return in_.blocks[position - 1]; }
  double duration(int position) const { return in_.durations[position - 1]; }

  void try_stage(int n, double t) {
    if (stage_busy_[n]) return;
    const auto& queue = in_.queues[n - 1];
    if (head_[n] == queue.size()) return;
    const OrderEntry& entry = queue[head_[n]];
    if (progress_[entry.microbatch] != entry.position - 1) return;
    if (!barrier_open_ && !block_at(entry.position).forward_phase()) return;
    ++head_[n];
    stage_busy_[n] = true;
    pending_.emplace(t + duration(entry.position), kStage, n, entry.microbatch, entry.position, t);
  }

  void try_channel(int n, double t) {
    if (channel_busy_[n]) return;
    const auto& queue = in_.channel_queues[n - 1];
    if (channel_head_[n] == queue.size()) return;
    const OrderEntry& entry = queue[channel_head_[n]];
    if (progress_[entry.microbatch] != entry.position - 1) return;
    ++channel_head_[n];
    channel_busy_[n] = true;
    pending_.emplace(t + duration(entry.position), kChannel, n, entry.microbatch, entry.position, t);
  }

  void complete(const Completion& c) {
    const auto [t, type, index, m, position, start] = c;
    const Block& block = block_at(position);
    out_.events.push_back({block, m, start, t});
    progress_[m] = position;

    bool released = false;
    if (block.forward_phase() && --forward_left_ == 0 && !barrier_open_) {
      barrier_open_ = true;
      released = true;
    }

    if (type == kChannel) {
      channel_busy_[index] = false;
      try_channel(index, t);
      try_stage(block_at(position + 1).index, t);
    } else {
      stage_busy_[index] = false;
      if (position < J_) try_channel(block_at(position + 1).index, t);
      if (in_.replicated[index - 1] && head_[index] == in_.queues[index - 1].size() &&
          !out_.allreduce_starts.count(index)) {
        out_.allreduce_starts[index] = t;
      }
      try_stage(index, t);
    }
    if (released) {
      for (int n = 1; n <= in_.stage_count; ++n) try_stage(n, t);
    }
  }

  const ListScheduleInput& in_;
  int J_;
  std::vector<int> progress_;
  std::vector<bool> stage_busy_;
  std::vector<bool> channel_busy_;  // index 1..N-1
  std::vector<std::size_t> head_;
  std::vector<std::size_t> channel_head_;  // index 1..N-1
  std::set<Completion> pending_;
  int forward_left_ = 0;
  bool barrier_open_ = true;
  Schedule out_;
};

}  // namespace

Schedule run_list_schedule(const ListScheduleInput& input) {
  return Engine(input).run();
}

}  // namespace syncpipe
