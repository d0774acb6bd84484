#include "syncpipe/cost.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "syncpipe/errors.hpp"

namespace syncpipe {

namespace {

void check_interval(const ModelProfile& profile, int first, int last) {
  if (first < 1 || first > last || last > profile.layer_count()) {
    throw ValidationError("invalid interval", fmt::format("[{}, {}] with {} layers", first, last,
                                                          profile.layer_count()));
  }
}

}  // namespace

LayerSums::LayerSums(const ModelProfile& profile)
    : fwd_(Eigen::VectorXd::Zero(profile.layer_count() + 1)),
      bwd_(Eigen::VectorXd::Zero(profile.layer_count() + 1)),
      params_(Eigen::VectorXd::Zero(profile.layer_count() + 1)) {
  for (int l = 1; l <= profile.layer_count(); ++l) {
    const LayerProfile& layer = profile.layer(l);
    fwd_(l) = fwd_(l - 1) + layer.fwd_time;
    bwd_(l) = bwd_(l - 1) + layer.bwd_time;
    params_(l) = params_(l - 1) + layer.param_bytes;
  }
}

StageTimes stage_compute_time(const ModelProfile& profile, int first, int last, int k) {
  check_interval(profile, first, last);
  if (k < 1) throw ValidationError("invalid replication", fmt::format("k = {}", k));
  StageTimes t;
  for (int l = first; l <= last; ++l) {
    t.fwd += profile.layer(l).fwd_time;
    t.bwd += profile.layer(l).bwd_time;
  }
  t.fwd /= k;
  t.bwd /= k;
  return t;
}

double allreduce_time(const ModelProfile& profile, int first, int last,
                      std::span<const GpuId> devices, const ClusterGraph& cluster) {
  check_interval(profile, first, last);
  if (devices.empty()) throw ValidationError("empty device set", "allreduce over no devices");
  for (GpuId d : devices) cluster.position(d);
  const int k = static_cast<int>(devices.size());
  if (k == 1) return 0.0;
  double params = 0.0;
  for (int l = first; l <= last; ++l) params += profile.layer(l).param_bytes;
  return allreduce_time(params, k, cluster.min_bandwidth(devices));
}

CommTimes interstage_comm_time(const ModelProfile& profile, int boundary,
                               std::span<const GpuId> left, std::span<const GpuId> right,
                               const ClusterGraph& cluster) {
  if (boundary < 1 || boundary >= profile.layer_count()) {
    throw ValidationError("invalid interval", fmt::format("boundary after layer {}", boundary));
  }
  if (left.empty() || right.empty()) throw ValidationError("empty device set", "channel endpoint");
  std::set<GpuId> lhs(left.begin(), left.end());
  for (GpuId d : right) {
    if (lhs.count(d)) throw ValidationError("device reused", fmt::format("gpu {} on both sides", d));
  }
  const double b = cluster.min_cross_bandwidth(left, right);
  const double links = static_cast<double>(left.size()) * static_cast<double>(right.size());
  const InterLayerEdge& e = profile.edge(boundary);
  return {e.fwd_bytes / (links * b), e.bwd_bytes / (links * b)};
}

PlanCosts plan_costs(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster) {
  PlanCosts costs;
  for (const Stage& s : plan.stages) {
    costs.stage.push_back(stage_compute_time(profile, s.layer_start, s.layer_end, s.replication()));
    costs.allreduce.push_back(allreduce_time(profile, s.layer_start, s.layer_end, s.devices, cluster));
  }
  for (int n = 1; n < plan.stage_count(); ++n) {
    const Stage& lhs = plan.stage(n);
    const Stage& rhs = plan.stage(n + 1);
    costs.channel.push_back(
        interstage_comm_time(profile, lhs.layer_end, lhs.devices, rhs.devices, cluster));
  }
  return costs;
}

BoundTerms bound_terms(const ModelProfile& profile, const ClusterGraph& cluster) {
  BoundTerms t;
  double total = 0.0;
  for (const LayerProfile& l : profile.layers) {
    t.p_max = std::max(t.p_max, l.fwd_time + l.bwd_time);
    total += l.fwd_time + l.bwd_time;
  }
  for (const InterLayerEdge& e : profile.edges) t.d_max = std::max(t.d_max, e.fwd_bytes + e.bwd_bytes);
  t.gamma = total / cluster.size();
  if (cluster.size() >= 2) {
    const double bmin = cluster.b_min();
    const double bmax = cluster.b_max();
    t.phi = std::max(t.p_max * bmax, t.d_max) / t.gamma * (1.0 / bmin - 1.0 / bmax);
  }
  return t;
}

CostSummary cost_summary(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster) {
  const PlanCosts costs = plan_costs(plan, profile, cluster);
  const int N = plan.stage_count();
  const double M = plan.microbatch_count;

  CostSummary out;
  out.per_stage_compute.resize(N);
  out.allreduce.resize(N);
  out.per_channel_comm.resize(N - 1);
  for (int n = 0; n < N; ++n) {
    out.per_stage_compute(n) = costs.stage[n].total();
    out.allreduce(n) = costs.allreduce[n];
  }
  for (int n = 0; n < N - 1; ++n) out.per_channel_comm(n) = costs.channel[n].total();

  out.cycle_time = out.per_stage_compute.maxCoeff();
  if (N > 1) out.cycle_time = std::max(out.cycle_time, out.per_channel_comm.maxCoeff());

  // allreduce is zero for unreplicated stages, so one expression covers both stage cases.
  out.workload = (M * out.per_stage_compute + out.allreduce).maxCoeff();
  if (N > 1) out.workload = std::max(out.workload, M * out.per_channel_comm.maxCoeff());

  const BoundTerms terms = bound_terms(profile, cluster);
  out.gamma = terms.gamma;
  out.phi = terms.phi;
  return out;
}

}  // namespace syncpipe
