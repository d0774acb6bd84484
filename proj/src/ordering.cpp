#include "syncpipe/ordering.hpp"

#include <algorithm>

#include "syncpipe/errors.hpp"
#include "syncpipe/min_cut.hpp"

namespace syncpipe {

GpuCut global_min_cut(const ClusterGraph& cluster, std::span<const GpuId> subset) {
  if (subset.size() < 2) throw ValidationError("min cut", "fewer than 2 vertices");
  std::vector<GpuId> ids(subset.begin(), subset.end());
  std::sort(ids.begin(), ids.end());
  std::vector<int> pos;
  for (GpuId g : ids) pos.push_back(cluster.position(g));

  const Eigen::MatrixXd induced = cluster.bandwidth_matrix()(pos, pos);
  const MinCutResult<double> cut = stoer_wagner_min_cut(induced);

  GpuCut out;
  out.weight = cut.weight;
  for (int v : cut.side_a) out.side_a.push_back(ids[v]);
  for (int v : cut.side_b) out.side_b.push_back(ids[v]);
  return out;
}

namespace {

void order_recursive(const ClusterGraph& cluster, std::vector<GpuId> devices, int rank_low,
                     int rank_high, DeviceOrdering& out) {
  if (devices.size() == 1) {
    out.rank[devices.front()] = rank_low;
    return;
  }
  GpuCut cut = global_min_cut(cluster, devices);
  const int split = rank_low + static_cast<int>(cut.side_a.size());
  out.splits.push_back({rank_low, rank_high, cut.side_a, cut.side_b, cut.weight});
  order_recursive(cluster, std::move(cut.side_a), rank_low, split - 1, out);
  order_recursive(cluster, std::move(cut.side_b), split, rank_high, out);
}

}  // namespace

DeviceOrdering rdo(const ClusterGraph& cluster) {
  if (cluster.size() == 0) throw ValidationError("empty cluster", "no gpus");
  DeviceOrdering out;
  order_recursive(cluster, cluster.gpu_ids(), 1, cluster.size(), out);
  out.order.resize(cluster.size());
  for (const auto& [gpu, rank] : out.rank) out.order[rank - 1] = gpu;
  return out;
}

}  // namespace syncpipe
