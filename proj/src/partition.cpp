#include "syncpipe/partition.hpp"

#include <algorithm>

#include "syncpipe/errors.hpp"

namespace syncpipe {

PrmSolver::PrmSolver(const ModelProfile& profile, const ClusterGraph& cluster, DeviceOrdering ordering,
                     int microbatches, Options options)
    : sums_(profile),
      boundary_bytes_(Eigen::VectorXd::Zero(profile.layer_count() + 1)),
      ordering_(std::move(ordering)),
      microbatches_(microbatches),
      options_(options) {
  if (microbatches < 1) throw ValidationError("non-positive microbatch count", "prm");
  for (int l = 1; l < profile.layer_count(); ++l) {
    boundary_bytes_(l) = profile.edge(l).fwd_bytes + profile.edge(l).bwd_bytes;
  }

  const int V = device_count();
  std::vector<int> pos;
  for (GpuId g : ordering_.order) pos.push_back(cluster.position(g));
  const Eigen::MatrixXd bw = cluster.bandwidth_matrix()(pos, pos);

  slice_min_ = Eigen::MatrixXd::Constant(V, V, kInfeasible);
  for (int a = 0; a < V; ++a)
    for (int b = a + 1; b < V; ++b)
      slice_min_(a, b) = std::min(slice_min_(a, b - 1), bw.col(b).segment(a, b - a).minCoeff());

  // cross_min_[(a * V + b) * V + c], 0-based, a <= b < c.
  cross_min_.assign(static_cast<std::size_t>(V) * V * V, kInfeasible);
  for (int b = 0; b < V; ++b) {
    for (int c = b + 1; c < V; ++c) {
      for (int a = b; a >= 0; --a) {
        double m = bw.row(a).segment(b + 1, c - b).minCoeff();
        if (a < b) m = std::min(m, cross_min_[((a + 1) * V + b) * V + c]);
        cross_min_[(a * V + b) * V + c] = m;
      }
    }
  }
}

double PrmSolver::cross_min(int a, int b, int c) const {
  const int V = device_count();
  return cross_min_[((a - 1) * V + (b - 1)) * V + (c - 1)];
}

std::uint64_t PrmSolver::pack(const DpKey& key) const {
  const std::uint64_t V1 = device_count() + 1;
  return ((static_cast<std::uint64_t>(key.l) * V1 + key.xi) * V1 + key.r) * V1 + key.i;
}

PrmSolver::Entry PrmSolver::evaluate(const DpKey& key) {
  if (!options_.memoize) return compute(key);
  const std::uint64_t k = pack(key);
  if (auto it = memo_.find(k); it != memo_.end()) return it->second;
  const Entry e = compute(key);
  memo_.emplace(k, e);
  return e;
}

PrmSolver::Entry PrmSolver::compute(const DpKey& key) {
  const auto [l, xi, r, i] = key;
  const double M = microbatches_;
  if (l < xi || i < xi || r < 1 || r > i) return {};
  if (!options_.replication && r != 1) return {};
  if (xi == 1) {
    if (r != i) return {};
    const double ar = allreduce_time(sums_.params(1, l), i, slice_min(1, i));
    return {M * sums_.compute(1, l) / i + ar, 0, 0};
  }
  if (r == i) return {};

  Entry best;
  const int last_first_device = i - r + 1;
  const double ar_bw = slice_min(last_first_device, i);
  const int max_prev_r = options_.replication ? i - r : 1;
  for (int lp = 1; lp <= l - 1; ++lp) {
    const double last_stage =
        M * sums_.compute(lp + 1, l) / r + allreduce_time(sums_.params(lp + 1, l), r, ar_bw);
    for (int rp = 1; rp <= max_prev_r; ++rp) {
      const double sub = evaluate({lp, xi - 1, rp, i - r}).w;
      const double b = cross_min(i - r - rp + 1, i - r, i);
      const double channel = M * boundary_bytes_(lp) / (static_cast<double>(rp) * r * b);
      const double max_time = std::max({sub, channel, last_stage});
      if (best.w > max_time) best = {max_time, lp, rp};
    }
  }
  return best;
}

PrmResult PrmSolver::prm(int l, int i, int xi, int r) {
  PrmResult out;
  Entry e = evaluate({l, xi, r, i});
  out.w = e.w;
  if (!out.feasible()) return out;

  DpKey key{l, xi, r, i};
  while (true) {
    Stage s;
    s.layer_start = e.split_layer + 1;
    s.layer_end = key.l;
    s.devices = ordering_.slice(key.i - key.r + 1, key.i);
    out.stages.push_back(std::move(s));
    if (key.xi == 1) break;
    key = {e.split_layer, key.xi - 1, e.split_replication, key.i - key.r};
    e = evaluate(key);
  }
  std::reverse(out.stages.begin(), out.stages.end());
  for (std::size_t n = 0; n < out.stages.size(); ++n) out.stages[n].index = static_cast<int>(n) + 1;
  return out;
}

PrmResult prm(const ModelProfile& profile, const ClusterGraph& cluster, const DeviceOrdering& ordering,
              int microbatches, int l, int i, int xi, int r) {
  PrmSolver solver(profile, cluster, ordering, microbatches);
  return solver.prm(l, i, xi, r);
}

PartitionChoice best_partition(PrmSolver& solver, int xi) {
  PartitionChoice out;
  const int L = solver.layer_count();
  const int V = solver.device_count();
  if (xi < 1 || xi > V) throw InfeasibleError("stage count outside 1..V");
  for (int r = 1; r <= V; ++r) {
    const double w = solver.w({L, xi, r, V});
    if (w < out.w) {
      out.w = w;
      out.replication = r;
    }
  }
  if (out.w < kInfeasible) {
    Plan plan;
    plan.microbatch_count = solver.microbatches();
    plan.stages = solver.prm(L, V, xi, out.replication).stages;
    out.plan = std::move(plan);
  }
  return out;
}

}  // namespace syncpipe
