#include "syncpipe/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "syncpipe/errors.hpp"

namespace syncpipe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

ClusterGraph::ClusterGraph(std::vector<GpuId> gpu_ids, Eigen::MatrixXd bandwidth)
    : ids_(std::move(gpu_ids)), bw_(std::move(bandwidth)) {
  if (bw_.rows() != static_cast<Eigen::Index>(ids_.size()) || bw_.cols() != bw_.rows()) {
    throw ValidationError("bandwidth shape",
                          fmt::format("{} gpus but {}x{} matrix", ids_.size(), bw_.rows(), bw_.cols()));
  }
  for (int i = 0; i < size(); ++i) {
    if (!pos_.emplace(ids_[i], i).second) {
      throw ValidationError("duplicate gpu id", fmt::format("gpu {}", ids_[i]));
    }
  }
}

ClusterGraph ClusterGraph::from_links(std::vector<GpuId> gpu_ids, std::span<const Link> links) {
  const auto n = static_cast<Eigen::Index>(gpu_ids.size());
  ClusterGraph g(std::move(gpu_ids), Eigen::MatrixXd::Constant(n, n, kNaN));
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> given =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  for (const Link& link : links) {
    if (!g.contains(link.a) || !g.contains(link.b)) {
      throw ValidationError("unknown device", fmt::format("link {}-{}", link.a, link.b));
    }
    if (link.a == link.b) {
      throw ValidationError("self link", fmt::format("gpu {}", link.a));
    }
    const int i = g.position(link.a);
    const int j = g.position(link.b);
    if (given(i, j)) {
      throw ValidationError("duplicate link", fmt::format("{}-{}", link.a, link.b));
    }
    given(i, j) = true;
    g.bw_(i, j) = link.bytes_per_s;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && given(i, j) && !given(j, i)) g.bw_(j, i) = g.bw_(i, j);
    }
  }
  return g;
}

ClusterGraph ClusterGraph::uniform(int gpu_count, double bytes_per_s) {
  std::vector<GpuId> ids(gpu_count);
  for (int i = 0; i < gpu_count; ++i) ids[i] = i + 1;
  Eigen::MatrixXd bw = Eigen::MatrixXd::Constant(gpu_count, gpu_count, bytes_per_s);
  bw.diagonal().setConstant(kNaN);
  return ClusterGraph(std::move(ids), std::move(bw));
}

int ClusterGraph::position(GpuId id) const {
  auto it = pos_.find(id);
  if (it == pos_.end()) throw ValidationError("unknown device", fmt::format("gpu {}", id));
  return it->second;
}

double ClusterGraph::min_bandwidth(std::span<const GpuId> devices) const {
  double best = kInf;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const int pi = position(devices[i]);
    for (std::size_t j = i + 1; j < devices.size(); ++j) {
      best = std::min(best, bw_(pi, position(devices[j])));
    }
  }
  return best;
}

double ClusterGraph::min_cross_bandwidth(std::span<const GpuId> left,
                                         std::span<const GpuId> right) const {
  double best = kInf;
  for (GpuId u : left) {
    const int pu = position(u);
    for (GpuId v : right) best = std::min(best, bw_(pu, position(v)));
  }
  return best;
}

double ClusterGraph::b_min() const {
  double best = kInf;
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j) best = std::min(best, bw_(i, j));
  return best;
}

double ClusterGraph::b_max() const {
  double best = -kInf;
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j) best = std::max(best, bw_(i, j));
  return best;
}

std::vector<Link> ClusterGraph::links() const {
  std::vector<Link> out;
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j) out.push_back({ids_[i], ids_[j], bw_(i, j)});
  return out;
}

std::vector<int> Plan::replicated_stages() const {
  std::vector<int> out;
  for (const Stage& s : stages)
    if (s.replicated()) out.push_back(s.index);
  return out;
}

std::vector<GpuId> Plan::used_devices() const {
  std::vector<GpuId> out;
  for (const Stage& s : stages) out.insert(out.end(), s.devices.begin(), s.devices.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::string block_label(const Block& block) {
  switch (block.kind) {
    case BlockKind::Forward: return fmt::format("F{}", block.index);
    case BlockKind::Merged: return fmt::format("FB{}", block.index);
    case BlockKind::Backward: return fmt::format("B{}", block.index);
    case BlockKind::ForwardComm: return fmt::format("X{}", block.index);
    case BlockKind::BackwardComm: return fmt::format("Y{}", block.index);
  }
  return "?";
}

ModelProfile validate_profile(const ModelProfile& profile) {
  const int L = profile.layer_count();
  if (L == 0) throw ValidationError("empty profile", "no layers");
  if (!(profile.microbatch_size > 0.0) || !std::isfinite(profile.microbatch_size)) {
    throw ValidationError("non-positive microbatch size", fmt::format("{}", profile.microbatch_size));
  }
  std::set<int> seen;
  bool any_work = false;
  for (std::size_t i = 0; i < profile.layers.size(); ++i) {
    const LayerProfile& layer = profile.layers[i];
    if (!seen.insert(layer.id).second) {
      throw ValidationError("duplicate layer id", fmt::format("layer {}", layer.id));
    }
    if (layer.id != static_cast<int>(i) + 1) {
      throw ValidationError("layer id gap",
                            fmt::format("position {} holds layer {}", i + 1, layer.id));
    }
    for (double v : {layer.fwd_time, layer.bwd_time, layer.param_bytes}) {
      if (!std::isfinite(v)) throw ValidationError("non-finite value", fmt::format("layer {}", layer.id));
    }
    if (layer.fwd_time < 0.0 || layer.bwd_time < 0.0) {
      throw ValidationError("negative time", fmt::format("layer {}", layer.id));
    }
    if (layer.param_bytes < 0.0) {
      throw ValidationError("negative bytes", fmt::format("layer {} parameters", layer.id));
    }
    any_work = any_work || layer.fwd_time + layer.bwd_time > 0.0;
  }
  if (!any_work) throw ValidationError("zero total time", "every layer has zero compute time");

  if (static_cast<int>(profile.edges.size()) != L - 1) {
    throw ValidationError("edge count mismatch",
                          fmt::format("{} layers need {} edges, got {}", L, L - 1, profile.edges.size()));
  }
  for (std::size_t i = 0; i < profile.edges.size(); ++i) {
    const InterLayerEdge& e = profile.edges[i];
    if (e.from != static_cast<int>(i) + 1 || e.to != e.from + 1) {
      throw ValidationError("missing edge", fmt::format("expected {}->{}, got {}->{}", i + 1, i + 2,
                                                        e.from, e.to));
    }
    if (!std::isfinite(e.fwd_bytes) || !std::isfinite(e.bwd_bytes)) {
      throw ValidationError("non-finite value", fmt::format("edge {}->{}", e.from, e.to));
    }
    if (e.fwd_bytes < 0.0 || e.bwd_bytes < 0.0) {
      throw ValidationError("negative bytes", fmt::format("edge {}->{}", e.from, e.to));
    }
  }
  return profile;
}

ClusterGraph validate_cluster(const ClusterGraph& cluster) {
  if (cluster.size() == 0) throw ValidationError("empty cluster", "no gpus");
  const auto& ids = cluster.gpu_ids();
  const Eigen::MatrixXd& bw = cluster.bandwidth_matrix();
  for (int i = 0; i < cluster.size(); ++i) {
    for (int j = i + 1; j < cluster.size(); ++j) {
      const double ab = bw(i, j);
      const double ba = bw(j, i);
      if (std::isnan(ab) || std::isnan(ba)) {
        throw ValidationError("missing pair", fmt::format("{}-{}", ids[i], ids[j]));
      }
      if (ab != ba) {
        throw ValidationError("asymmetric bandwidth",
                              fmt::format("{}-{}: {} vs {}", ids[i], ids[j], ab, ba));
      }
      if (!(ab > 0.0) || !std::isfinite(ab)) {
        throw ValidationError("non-positive bandwidth", fmt::format("{}-{}: {}", ids[i], ids[j], ab));
      }
    }
  }
  return cluster;
}

Plan validate_plan(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster) {
  if (plan.microbatch_count < 1) {
    throw ValidationError("non-positive microbatch count", fmt::format("{}", plan.microbatch_count));
  }
  if (plan.stages.empty()) throw ValidationError("empty plan", "no stages");
  const int L = profile.layer_count();
  std::set<GpuId> used;
  int expected_start = 1;
  for (std::size_t n = 0; n < plan.stages.size(); ++n) {
    const Stage& s = plan.stages[n];
    if (s.index != static_cast<int>(n) + 1) {
      throw ValidationError("stage index", fmt::format("position {} has index {}", n + 1, s.index));
    }
    if (s.layer_start > s.layer_end) {
      throw ValidationError("empty stage", fmt::format("stage {} [{}, {}]", s.index, s.layer_start,
                                                       s.layer_end));
    }
    if (s.layer_start < expected_start) {
      throw ValidationError("layer overlap", fmt::format("stage {} starts at layer {}", s.index,
                                                         s.layer_start));
    }
    if (s.layer_start > expected_start) {
      throw ValidationError("layer gap", fmt::format("layer {} unassigned", expected_start));
    }
    if (s.layer_end > L) {
      throw ValidationError("layer out of range", fmt::format("stage {} ends at {} > {}", s.index,
                                                              s.layer_end, L));
    }
    expected_start = s.layer_end + 1;
    if (s.devices.empty()) throw ValidationError("empty device set", fmt::format("stage {}", s.index));
    for (GpuId d : s.devices) {
      if (!cluster.contains(d)) throw ValidationError("unknown device", fmt::format("gpu {}", d));
      if (!used.insert(d).second) {
        throw ValidationError("device reused", fmt::format("gpu {} (stage {})", d, s.index));
      }
    }
  }
  if (expected_start != L + 1) {
    throw ValidationError("layer gap", fmt::format("layers {}..{} unassigned", expected_start, L));
  }
  return plan;
}

std::vector<GpuId> idle_devices(const Plan& plan, const ClusterGraph& cluster) {
  const std::vector<GpuId> used = plan.used_devices();
  std::vector<GpuId> out;
  for (GpuId g : cluster.gpu_ids())
    if (!std::binary_search(used.begin(), used.end(), g)) out.push_back(g);
  return out;
}

}  // namespace syncpipe
