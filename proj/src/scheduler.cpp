#include "syncpipe/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <tuple>

#include <fmt/format.h>

#include "syncpipe/errors.hpp"
#include "syncpipe/event_sim.hpp"

namespace syncpipe {

std::vector<Block> build_block_list(int stage_count) {
  if (stage_count < 1) throw ValidationError("empty plan", "no stages");
  std::vector<Block> blocks;
  blocks.reserve(4 * stage_count - 3);
  for (int n = 1; n < stage_count; ++n) {
    blocks.push_back({BlockKind::Forward, n, 0});
    blocks.push_back({BlockKind::ForwardComm, n, 0});
  }
  blocks.push_back({BlockKind::Merged, stage_count, 0});
  for (int n = stage_count - 1; n >= 1; --n) {
    blocks.push_back({BlockKind::BackwardComm, n, 0});
    blocks.push_back({BlockKind::Backward, n, 0});
  }
  for (std::size_t j = 0; j < blocks.size(); ++j) blocks[j].position = static_cast<int>(j) + 1;
  return blocks;
}

ExecutionOrder compute_execution_order(int stage_count, int microbatches) {
  const std::vector<Block> blocks = build_block_list(stage_count);
  const int J = static_cast<int>(blocks.size());
  std::vector<std::deque<int>> available(J);
  for (int m = 1; m <= microbatches; ++m) available[0].push_back(m);

  ExecutionOrder order;
  order.queues.resize(stage_count);
  order.channel_queues.resize(stage_count - 1);
  std::vector<int> active;
  while (true) {
    active.clear();
    for (int j = 0; j < J; ++j)
      if (!available[j].empty()) active.push_back(j);
    if (active.empty()) break;
    ++order.passes;
    for (int j : active) {
      const int m = available[j].front();
      available[j].pop_front();
      if (j + 1 < J) available[j + 1].push_back(m);
      auto& queues = blocks[j].is_compute() ? order.queues : order.channel_queues;
      queues[blocks[j].index - 1].push_back({m, j + 1});
    }
  }
  return order;
}

ExecutionOrder compute_execution_order(const Plan& plan) {
  return compute_execution_order(plan.stage_count(), plan.microbatch_count);
}

std::vector<double> block_durations(const std::vector<Block>& blocks, const PlanCosts& costs) {
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const Block& b : blocks) {
    switch (b.kind) {
      case BlockKind::Forward: out.push_back(costs.stage[b.index - 1].fwd); break;
      case BlockKind::Backward: out.push_back(costs.stage[b.index - 1].bwd); break;
      case BlockKind::Merged: out.push_back(costs.stage[b.index - 1].total()); break;
      case BlockKind::ForwardComm: out.push_back(costs.channel[b.index - 1].fwd); break;
      case BlockKind::BackwardComm: out.push_back(costs.channel[b.index - 1].bwd); break;
    }
  }
  return out;
}

Schedule simulate_pe(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster) {
  const PlanCosts costs = plan_costs(plan, profile, cluster);
  ListScheduleInput in;
  in.stage_count = plan.stage_count();
  in.microbatches = plan.microbatch_count;
  in.blocks = build_block_list(in.stage_count);
  in.durations = block_durations(in.blocks, costs);
  ExecutionOrder order = compute_execution_order(plan);
  in.queues = std::move(order.queues);
  in.channel_queues = std::move(order.channel_queues);
  in.allreduce = costs.allreduce;
  for (const Stage& s : plan.stages) in.replicated.push_back(s.replicated());
  return run_list_schedule(in);
}

double schedule_makespan(const Schedule& schedule, const PlanCosts& costs) {
  const int N = static_cast<int>(costs.stage.size());
  double makespan = 0.0;
  for (const ScheduledEvent& e : schedule.events) {
    const bool stage1_backward = e.block.index == 1 && (e.block.kind == BlockKind::Backward ||
                                                        (N == 1 && e.block.kind == BlockKind::Merged));
    if (stage1_backward) makespan = std::max(makespan, e.end);
  }
  for (const auto& [stage, start] : schedule.allreduce_starts) {
    if (stage >= 1 && stage <= N) makespan = std::max(makespan, start + costs.allreduce[stage - 1]);
  }
  return makespan;
}

namespace {

struct Timing {
  const ScheduledEvent* fwd = nullptr;     // Forward or Merged
  const ScheduledEvent* bwd = nullptr;     // Backward or Merged
  const ScheduledEvent* to_next = nullptr;  // X_n
  const ScheduledEvent* to_prev = nullptr;  // Y_{n-1}, stored on stage n
};

}  // namespace

std::vector<Violation> validate_schedule(const Schedule& schedule, const Plan& plan,
                                         const ModelProfile& profile, const ClusterGraph& cluster,
                                         ScheduleCheckOptions options) {
  std::vector<Violation> out;
  const PlanCosts costs = plan_costs(plan, profile, cluster);
  const int N = plan.stage_count();
  const int M = plan.microbatch_count;

  double scale = 1.0;
  for (const ScheduledEvent& e : schedule.events) scale = std::max(scale, std::abs(e.end));
  const double tol = 1e-9 * scale;
  auto add = [&out](std::string c, int m, int s, std::string d) {
    out.push_back({std::move(c), m, s, std::move(d)});
  };

  // timing[m][n], 1-based
  std::vector<std::vector<Timing>> timing(M + 1, std::vector<Timing>(N + 1));
  std::vector<std::vector<const ScheduledEvent*>> on_stage(N + 1), on_channel(N + 1);
  std::map<std::tuple<int, int, int>, int> seen;
  bool merged_last = false;
  bool split_last = false;

  for (const ScheduledEvent& e : schedule.events) {
    const Block& b = e.block;
    const int limit = b.is_compute() ? N : N - 1;
    if (e.microbatch < 1 || e.microbatch > M || b.index < 1 || b.index > limit ||
        (b.kind == BlockKind::Merged && b.index != N)) {
      add("unexpected event", e.microbatch, b.index, block_label(b));
      continue;
    }
    if (seen[{e.microbatch, static_cast<int>(b.kind), b.index}]++ > 0) {
      add("duplicate event", e.microbatch, b.index, block_label(b));
      continue;
    }
    if (e.start < -tol) add("negative start", e.microbatch, b.index, block_label(b));
    Timing& t = timing[e.microbatch][b.index];
    double expected = 0.0;
    switch (b.kind) {
      case BlockKind::Forward:
        t.fwd = &e;
        expected = costs.stage[b.index - 1].fwd;
        if (b.index == N) split_last = true;
        break;
      case BlockKind::Backward:
        t.bwd = &e;
        expected = costs.stage[b.index - 1].bwd;
        if (b.index == N) split_last = true;
        break;
      case BlockKind::Merged:
        t.fwd = t.bwd = &e;
        expected = costs.stage[b.index - 1].total();
        merged_last = true;
        break;
      case BlockKind::ForwardComm:
        t.to_next = &e;
        expected = costs.channel[b.index - 1].fwd;
        break;
      case BlockKind::BackwardComm:
        timing[e.microbatch][b.index + 1].to_prev = &e;
        expected = costs.channel[b.index - 1].bwd;
        break;
    }
    if (std::abs(e.end - e.start - expected) > tol) {
      add("duration mismatch", e.microbatch, b.index,
          fmt::format("{} takes {} instead of {}", block_label(b), e.end - e.start, expected));
    }
    (b.is_compute() ? on_stage : on_channel)[b.index].push_back(&e);
  }
  if (merged_last && split_last) add("unexpected event", 0, N, "last stage both merged and split");

  // Derived forward/backward start and end per (m, n).
  auto fwd_start = [&](const Timing& t) { return t.fwd->start; };
  auto fwd_end = [&](const Timing& t, int n) {
    return t.fwd->block.kind == BlockKind::Merged ? t.fwd->start + costs.stage[n - 1].fwd : t.fwd->end;
  };
  auto bwd_start = [&](const Timing& t, int n) {
    return t.bwd->block.kind == BlockKind::Merged ? t.bwd->start + costs.stage[n - 1].fwd : t.bwd->start;
  };
  auto bwd_end = [&](const Timing& t) { return t.bwd->end; };

  bool complete = true;
  for (int m = 1; m <= M; ++m) {
    for (int n = 1; n <= N; ++n) {
      const Timing& t = timing[m][n];
      if (!t.fwd || !t.bwd || (n < N && !t.to_next) || (n > 1 && !t.to_prev)) {
        add("missing event", m, n, fmt::format("stage {} incomplete", n));
        complete = false;
      }
    }
  }
  if (!complete) return out;

  for (int m = 1; m <= M; ++m) {
    const Timing& last = timing[m][N];
    if (fwd_end(last, N) > bwd_start(last, N) + tol) {
      add("forward-backward dependency", m, N, "backward starts before forward ends");
    }
    for (int n = 1; n < N; ++n) {
      const Timing& here = timing[m][n];
      const Timing& next = timing[m][n + 1];
      const CommTimes& c = costs.channel[n - 1];
      if (fwd_end(here, n) + c.fwd > fwd_start(next) + tol || here.to_next->start < fwd_end(here, n) - tol ||
          here.to_next->end > fwd_start(next) + tol) {
        add("stage dependency", m, n + 1, fmt::format("forward {} -> {}", n, n + 1));
      }
      if (bwd_end(next) + c.bwd > bwd_start(here, n) + tol || next.to_prev->start < bwd_end(next) - tol ||
          next.to_prev->end > bwd_start(here, n) + tol) {
        add("stage dependency", m, n, fmt::format("backward {} -> {}", n + 1, n));
      }
    }
  }
  if (std::abs(fwd_start(timing[1][1])) > tol) {
    add("first start", 1, 1, fmt::format("e^f(1, 1) = {}", fwd_start(timing[1][1])));
  }

  for (const Stage& s : plan.stages) {
    auto it = schedule.allreduce_starts.find(s.index);
    if (!s.replicated()) {
      if (it != schedule.allreduce_starts.end()) add("unexpected allreduce", 0, s.index, "stage not replicated");
      continue;
    }
    if (it == schedule.allreduce_starts.end()) {
      add("allreduce dependency", 0, s.index, "no allreduce scheduled");
      continue;
    }
    for (int m = 1; m <= M; ++m) {
      if (bwd_end(timing[m][s.index]) > it->second + tol) {
        add("allreduce dependency", m, s.index, "allreduce starts before backward ends");
      }
    }
  }

  auto check_overlap = [&](std::vector<const ScheduledEvent*>& events, const char* what, int index) {
    std::sort(events.begin(), events.end(), [](const ScheduledEvent* a, const ScheduledEvent* b) {
      return std::tie(a->start, a->end) < std::tie(b->start, b->end);
    });
    for (std::size_t k = 1; k < events.size(); ++k) {
      if (events[k]->start < events[k - 1]->end - tol) {
        add(fmt::format("resource overlap on {} {}", what, index), events[k]->microbatch, index,
            fmt::format("{} m{} starts at {} before {} m{} ends at {}", block_label(events[k]->block),
                        events[k]->microbatch, events[k]->start, block_label(events[k - 1]->block),
                        events[k - 1]->microbatch, events[k - 1]->end));
      }
    }
  };
  for (int n = 1; n <= N; ++n) check_overlap(on_stage[n], "stage", n);
  for (int n = 1; n < N; ++n) check_overlap(on_channel[n], "channel", n);

  if (options.forward_barrier) {
    double forward_done = 0.0;
    double backward_begin = std::numeric_limits<double>::infinity();
    for (const ScheduledEvent& e : schedule.events) {
      if (e.block.forward_phase()) forward_done = std::max(forward_done, e.end);
      else backward_begin = std::min(backward_begin, e.start);
    }
    if (backward_begin < forward_done - tol) {
      add("forward barrier", 0, 0, fmt::format("backward at {} before forward done at {}", backward_begin,
                                               forward_done));
    }
  }

  const double recomputed = schedule_makespan(schedule, costs);
  if (std::abs(recomputed - schedule.makespan) > tol) {
    add("makespan mismatch", 0, 0, fmt::format("reported {}, events give {}", schedule.makespan, recomputed));
  }
  return out;
}

double lemma1_bound(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster) {
  const CostSummary summary = cost_summary(plan, profile, cluster);
  const double N = plan.stage_count();
  const double M = plan.microbatch_count;
  double max_ar = 0.0;
  for (int n : plan.replicated_stages()) max_ar = std::max(max_ar, summary.allreduce(n - 1));
  return (1.0 + (4.0 * N - 4.0) / M) * M * summary.cycle_time + max_ar;
}

CycleSchedule simulate_cycle_schedule(const Plan& plan, const ModelProfile& profile,
                                      const ClusterGraph& cluster) {
  const PlanCosts costs = plan_costs(plan, profile, cluster);
  const int N = plan.stage_count();
  const int M = plan.microbatch_count;
  const std::vector<Block> blocks = build_block_list(N);
  const std::vector<double> dur = block_durations(blocks, costs);
  const int J = static_cast<int>(blocks.size());

  std::vector<std::deque<int>> available(J);
  for (int m = 1; m <= M; ++m) available[0].push_back(m);
  std::vector<int> backward_done(N + 1, 0);

  CycleSchedule out;
  double cycle_start = 0.0;
  std::vector<int> active;
  while (true) {
    active.clear();
    for (int j = 0; j < J; ++j)
      if (!available[j].empty()) active.push_back(j);
    if (active.empty()) break;
    ++out.cycles;
    std::vector<double> stage_cursor(N + 1, cycle_start);
    std::vector<double> channel_cursor(N + 1, cycle_start);
    double cycle_end = cycle_start;
    for (int j : active) {
      const int m = available[j].front();
      available[j].pop_front();
      if (j + 1 < J) available[j + 1].push_back(m);
      const Block& b = blocks[j];
      double& cursor = b.is_compute() ? stage_cursor[b.index] : channel_cursor[b.index];
      const double start = cursor;
      cursor += dur[j];
      cycle_end = std::max(cycle_end, cursor);
      out.schedule.events.push_back({b, m, start, cursor});
      const bool backward = b.kind == BlockKind::Backward || b.kind == BlockKind::Merged;
      if (backward && ++backward_done[b.index] == M && plan.stage(b.index).replicated()) {
        out.schedule.allreduce_starts[b.index] = cursor;
      }
    }
    cycle_start = cycle_end;
  }
  out.schedule.makespan = schedule_makespan(out.schedule, costs);
  return out;
}

}  // namespace syncpipe
