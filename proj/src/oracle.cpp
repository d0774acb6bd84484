#include "syncpipe/oracle.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "syncpipe/cost.hpp"
#include "syncpipe/errors.hpp"
#include "syncpipe/scheduler.hpp"

namespace syncpipe {

void check_oracle_limits(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                         const OracleLimits& limits) {
  if (limits.max_layers < 1 || limits.max_gpus < 1 || limits.max_microbatches < 1 || limits.node_budget < 1) {
    throw OracleLimitError("oracle limits must be positive");
  }
  if (profile.layer_count() > limits.max_layers || cluster.size() > limits.max_gpus ||
      microbatches > limits.max_microbatches || microbatches < 1) {
    throw OracleLimitError(fmt::format("instance L={} V={} M={} exceeds oracle limits L<={} V<={} M<={}",
                                       profile.layer_count(), cluster.size(), microbatches, limits.max_layers,
                                       limits.max_gpus, limits.max_microbatches));
  }
}

std::vector<std::vector<std::pair<int, int>>> interval_partitions(int layers, int stages) {
  std::vector<std::vector<std::pair<int, int>>> out;
  if (stages < 1 || stages > layers) return out;
  // Choose stages - 1 cut points among the layers - 1 boundaries.
  std::vector<int> cuts(stages - 1);
  std::function<void(int, int)> rec = [&](int k, int from) {
    if (k == stages - 1) {
      std::vector<std::pair<int, int>> parts;
      int first = 1;
      for (int c : cuts) {
        parts.emplace_back(first, c);
        first = c + 1;
      }
      parts.emplace_back(first, layers);
      out.push_back(std::move(parts));
      return;
    }
    for (int c = from; c <= layers - (stages - 1 - k); ++c) {
      cuts[k] = c;
      rec(k + 1, c + 1);
    }
  };
  rec(0, 1);
  return out;
}

std::vector<Plan> enumerate_plans(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                                  const OracleLimits& limits) {
  check_oracle_limits(profile, cluster, microbatches, limits);
  std::vector<GpuId> gpus = cluster.gpu_ids();
  std::sort(gpus.begin(), gpus.end());
  const int L = profile.layer_count();
  const int V = cluster.size();

  std::vector<Plan> plans;
  for (int xi = 1; xi <= std::min(L, V); ++xi) {
    const auto partitions = interval_partitions(L, xi);
    // label[g] in 0..xi, 0 = idle; enumerate in base xi + 1.
    std::vector<int> label(V, 0);
    const int base = xi + 1;
    std::int64_t total = 1;
    for (int v = 0; v < V; ++v) total *= base;
    for (std::int64_t code = 0; code < total; ++code) {
      std::int64_t c = code;
      std::vector<std::vector<GpuId>> sets(xi + 1);
      for (int v = 0; v < V; ++v) {
        label[v] = static_cast<int>(c % base);
        c /= base;
        sets[label[v]].push_back(gpus[v]);
      }
      if (!limits.allow_idle_gpus && !sets[0].empty()) continue;
      bool ok = true;
      for (int n = 1; n <= xi; ++n) ok = ok && !sets[n].empty();
      if (!ok) continue;
      for (const auto& parts : partitions) {
        Plan plan;
        plan.microbatch_count = microbatches;
        for (int n = 1; n <= xi; ++n) {
          plan.stages.push_back({n, parts[n - 1].first, parts[n - 1].second, sets[n]});
        }
        plans.push_back(std::move(plan));
        if (static_cast<std::int64_t>(plans.size()) > limits.node_budget) {
          throw OracleLimitError("plan enumeration exceeded node budget");
        }
      }
    }
  }
  return plans;
}

WStar brute_force_w_star(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                         const OracleLimits& limits) {
  const std::vector<Plan> plans = enumerate_plans(profile, cluster, microbatches, limits);
  WStar best;
  best.w = std::numeric_limits<double>::infinity();
  best.plans = plans.size();
  for (const Plan& plan : plans) {
    const double w = cost_summary(plan, profile, cluster).workload;
    if (w < best.w) {
      best.w = w;
      best.plan = plan;
    }
  }
  return best;
}

namespace {

struct Op {
  Block block;
  int resource = 0;
  double duration = 0.0;
  double tail = 0.0;  // total duration of the ops after this one in the chain
  bool backward = false;
  int stage = 0;      // stage of a compute op
};

// Depth-first branch and bound over Giffler-Thompson active schedules.
class ScheduleSearch {
 public:
  ScheduleSearch(const Plan& plan, const PlanCosts& costs, double upper_bound, std::int64_t budget)
      : N_(plan.stage_count()), M_(plan.microbatch_count), budget_(budget), best_(upper_bound) {
    // Chain: F_1, X_1, ..., F_N, B_N, Y_{N-1}, B_{N-1}, ..., B_1.
    for (int n = 1; n <= N_; ++n) {
      chain_.push_back({{BlockKind::Forward, n, 0}, n - 1, costs.stage[n - 1].fwd, 0, false, n});
      if (n < N_) chain_.push_back({{BlockKind::ForwardComm, n, 0}, N_ + n - 1, costs.channel[n - 1].fwd});
    }
    for (int n = N_; n >= 1; --n) {
      if (n < N_) chain_.push_back({{BlockKind::BackwardComm, n, 0}, N_ + n - 1, costs.channel[n - 1].bwd});
      chain_.push_back({{BlockKind::Backward, n, 0}, n - 1, costs.stage[n - 1].bwd, 0, true, n});
    }
    double acc = 0.0;
    for (int k = static_cast<int>(chain_.size()) - 1; k >= 0; --k) {
      chain_[k].tail = acc;
      acc += chain_[k].duration;
    }
    const int R = 2 * N_ - 1;
    res_free_.assign(R, 0.0);
    res_left_.assign(R, 0.0);
    for (const Op& op : chain_) res_left_[op.resource] += M_ * op.duration;
    next_.assign(M_, 0);
    ready_.assign(M_, 0.0);
    allreduce_ = costs.allreduce;
    replicated_.resize(N_);
    for (int n = 0; n < N_; ++n) replicated_[n] = plan.stage(n + 1).replicated();
    bwd_done_.assign(N_, 0);
    bwd_last_end_.assign(N_, 0.0);
  }

  void run() { dfs(0.0); }

  bool improved() const { return improved_; }
  double best() const { return best_; }
  const Schedule& schedule() const { return best_schedule_; }
  std::int64_t nodes() const { return nodes_; }

 private:
  bool prunable(double bound) const { return bound >= best_ - 1e-12 * std::abs(best_); }

  double lower_bound(double partial) const {
    const int len = static_cast<int>(chain_.size());
    double lb = partial;
    std::vector<double> min_tail(res_free_.size(), std::numeric_limits<double>::infinity());
    for (int m = 0; m < M_; ++m) {
      if (next_[m] == len) continue;
      const Op& op = chain_[next_[m]];
      lb = std::max(lb, ready_[m] + op.duration + op.tail);
      for (int k = next_[m]; k < len; ++k) {
        min_tail[chain_[k].resource] = std::min(min_tail[chain_[k].resource], chain_[k].tail);
      }
    }
    for (std::size_t r = 0; r < res_free_.size(); ++r) {
      if (res_left_[r] <= 0.0 && !std::isfinite(min_tail[r])) continue;
      const double done = res_free_[r] + res_left_[r];
      lb = std::max(lb, done + (std::isfinite(min_tail[r]) ? min_tail[r] : 0.0));
      if (static_cast<int>(r) < N_ && replicated_[r] && bwd_done_[r] < M_) lb = std::max(lb, done + allreduce_[r]);
    }
    return lb;
  }

  void dfs(double partial) {
    if (++nodes_ > budget_) throw OracleLimitError(fmt::format("schedule search exceeded {} nodes", budget_));
    const int len = static_cast<int>(chain_.size());

    int pick = -1;
    double pick_ect = std::numeric_limits<double>::infinity();
    for (int m = 0; m < M_; ++m) {
      if (next_[m] == len) continue;
      const Op& op = chain_[next_[m]];
      const double ect = std::max(ready_[m], res_free_[op.resource]) + op.duration;
      if (ect < pick_ect || (ect == pick_ect && op.resource < chain_[next_[pick]].resource)) {
        pick = m;
        pick_ect = ect;
      }
    }
    if (pick < 0) {
      if (partial < best_) {
        best_ = partial;
        improved_ = true;
        best_schedule_.events = trail_;
        best_schedule_.allreduce_starts.clear();
        for (int n = 0; n < N_; ++n)
          if (replicated_[n]) best_schedule_.allreduce_starts[n + 1] = bwd_last_end_[n];
        best_schedule_.makespan = partial;
      }
      return;
    }
    const int resource = chain_[next_[pick]].resource;

    struct Branch {
      int m;
      double start;
    };
    std::vector<Branch> branches;
    for (int m = 0; m < M_; ++m) {
      if (next_[m] == len) continue;
      const Op& op = chain_[next_[m]];
      if (op.resource != resource) continue;
      const double est = std::max(ready_[m], res_free_[resource]);
      if (m != pick && !(est < pick_ect)) continue;
      bool duplicate = false;
      for (const Branch& b : branches) {
        duplicate = duplicate || (next_[b.m] == next_[m] && ready_[b.m] == ready_[m]);
      }
      if (!duplicate) branches.push_back({m, est});
    }
    std::stable_sort(branches.begin(), branches.end(),
                     [](const Branch& a, const Branch& b) { return a.start < b.start; });

    for (const Branch& br : branches) {
      const int m = br.m;
      const Op& op = chain_[next_[m]];
      const double end = br.start + op.duration;

      // apply
      const double saved_free = res_free_[resource];
      const double saved_ready = ready_[m];
      const double saved_bwd_end = op.backward ? bwd_last_end_[op.stage - 1] : 0.0;
      res_free_[resource] = end;
      res_left_[resource] -= op.duration;
      ready_[m] = end;
      ++next_[m];
      double new_partial = partial;
      if (op.backward) {
        const int s = op.stage - 1;
        ++bwd_done_[s];
        bwd_last_end_[s] = std::max(bwd_last_end_[s], end);
        if (op.stage == 1) new_partial = std::max(new_partial, end);
        if (bwd_done_[s] == M_ && replicated_[s]) new_partial = std::max(new_partial, bwd_last_end_[s] + allreduce_[s]);
      }
      trail_.push_back({op.block, m + 1, br.start, end});

      if (!prunable(lower_bound(new_partial))) dfs(new_partial);

      // undo
      trail_.pop_back();
      if (op.backward) {
        --bwd_done_[op.stage - 1];
        bwd_last_end_[op.stage - 1] = saved_bwd_end;
      }
      --next_[m];
      ready_[m] = saved_ready;
      res_left_[resource] += op.duration;
      res_free_[resource] = saved_free;
    }
  }

  int N_;
  int M_;
  std::int64_t budget_;
  double best_;
  bool improved_ = false;
  std::int64_t nodes_ = 0;
  std::vector<Op> chain_;
  std::vector<double> res_free_;
  std::vector<double> res_left_;
  std::vector<int> next_;
  std::vector<double> ready_;
  std::vector<double> allreduce_;
  std::vector<bool> replicated_;
  std::vector<int> bwd_done_;
  std::vector<double> bwd_last_end_;
  std::vector<ScheduledEvent> trail_;
  Schedule best_schedule_;
};

}  // namespace

OptimalSchedule optimal_schedule(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster,
                                 double upper_bound, std::int64_t node_budget) {
  const PlanCosts costs = plan_costs(plan, profile, cluster);
  ScheduleSearch search(plan, costs, upper_bound, node_budget);
  search.run();
  OptimalSchedule out;
  out.improved = search.improved();
  out.makespan = search.best();
  out.schedule = search.schedule();
  out.nodes = search.nodes();
  return out;
}

TStar brute_force_t_star(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                         const OracleLimits& limits) {
  std::vector<Plan> plans = enumerate_plans(profile, cluster, microbatches, limits);
  std::vector<std::pair<double, std::size_t>> by_w;
  for (std::size_t k = 0; k < plans.size(); ++k) {
    by_w.emplace_back(cost_summary(plans[k], profile, cluster).workload, k);
  }
  std::stable_sort(by_w.begin(), by_w.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  TStar best;
  best.makespan = std::numeric_limits<double>::infinity();
  best.plans = plans.size();
  for (const auto& [w, k] : by_w) {
    // Makespan of any schedule is at least the plan's workload W.
    if (w >= best.makespan) break;
    const Plan& plan = plans[k];
    Schedule pe = simulate_pe(plan, profile, cluster);
    if (pe.makespan < best.makespan) {
      best.makespan = pe.makespan;
      best.plan = plan;
      best.schedule = std::move(pe);
    }
    const std::int64_t left = limits.node_budget - best.nodes;
    if (left <= 0) throw OracleLimitError("schedule search exceeded node budget");
    OptimalSchedule opt = optimal_schedule(plan, profile, cluster, best.makespan, left);
    best.nodes += opt.nodes;
    if (opt.improved) {
      best.makespan = opt.makespan;
      best.plan = plan;
      best.schedule = std::move(opt.schedule);
    }
  }
  return best;
}

}  // namespace syncpipe
