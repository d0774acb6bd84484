#include "syncpipe/spp.hpp"

#include <fmt/format.h>

#include "syncpipe/cost.hpp"
#include "syncpipe/errors.hpp"
#include "syncpipe/scheduler.hpp"

namespace syncpipe {

namespace {

SweepRow evaluate_stage_count(PrmSolver& solver, const ModelProfile& profile, const ClusterGraph& cluster,
                              int xi, Plan* plan_out, Schedule* schedule_out) {
  SweepRow row;
  row.stages = xi;
  if (xi > solver.layer_count()) return row;
  PartitionChoice choice = best_partition(solver, xi);
  if (!choice.feasible()) return row;
  row.feasible = true;
  row.w = choice.w;
  row.replication = choice.replication;
  Schedule schedule = simulate_pe(*choice.plan, profile, cluster);
  row.makespan = schedule.makespan;
  row.lemma1 = lemma1_bound(*choice.plan, profile, cluster);
  if (plan_out) *plan_out = std::move(*choice.plan);
  if (schedule_out) *schedule_out = std::move(schedule);
  return row;
}

SppResult prepare(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches) {
  validate_profile(profile);
  validate_cluster(cluster);
  if (microbatches < 1) {
    throw ValidationError("non-positive microbatch count", fmt::format("{}", microbatches));
  }
  SppResult result;
  result.ordering = rdo(cluster);
  const Theorem1Report report = theorem1_report(profile, cluster, microbatches, 0.0);
  result.phi = report.phi;
  result.theorem1_factor = report.factor;
  return result;
}

}  // namespace

SppResult spp(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches) {
  SppResult result = prepare(profile, cluster, microbatches);
  PrmSolver solver(profile, cluster, result.ordering, microbatches);
  for (int xi = 1; xi <= cluster.size(); ++xi) {
    Plan plan;
    Schedule schedule;
    SweepRow row = evaluate_stage_count(solver, profile, cluster, xi, &plan, &schedule);
    if (row.feasible && row.makespan < result.makespan) {
      result.makespan = row.makespan;
      result.best_stages = xi;
      result.best_plan = std::move(plan);
      result.best_schedule = std::move(schedule);
    }
    result.sweep.push_back(row);
  }
  return result;
}

SppResult spp_fixed_stages(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                           int stages) {
  SppResult result = prepare(profile, cluster, microbatches);
  if (stages < 1 || stages > cluster.size() || stages > profile.layer_count()) {
    throw InfeasibleError(fmt::format("{} stages infeasible for {} layers on {} gpus", stages,
                                      profile.layer_count(), cluster.size()));
  }
  PrmSolver solver(profile, cluster, result.ordering, microbatches);
  SweepRow row =
      evaluate_stage_count(solver, profile, cluster, stages, &result.best_plan, &result.best_schedule);
  if (!row.feasible) throw InfeasibleError(fmt::format("{} stages infeasible", stages));
  result.makespan = row.makespan;
  result.best_stages = stages;
  result.sweep.push_back(row);
  return result;
}

Theorem1Report theorem1_report(const ModelProfile& profile, const ClusterGraph& cluster, int microbatches,
                               double t_spp, std::optional<double> t_star) {
  Theorem1Report r;
  r.phi = bound_terms(profile, cluster).phi;
  const double V = cluster.size();
  r.factor = (2.0 + (4.0 * V - 4.0) / microbatches) * (1.0 + r.phi);
  if (t_star) {
    r.t_star = t_star;
    r.ratio = t_spp / *t_star;
    r.holds = *r.ratio <= r.factor;
  }
  return r;
}

}  // namespace syncpipe
