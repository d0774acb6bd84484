#pragma once

#include <map>
#include <span>
#include <vector>

#include "syncpipe/model.hpp"

namespace syncpipe {

struct GpuCut {
  std::vector<GpuId> side_a;  // holds the smallest GPU id
  std::vector<GpuId> side_b;
  double weight = 0.0;        // bytes/second crossing the cut
};

/// Global minimum cut of the subgraph induced by `subset` (at least two GPUs).
GpuCut global_min_cut(const ClusterGraph& cluster, std::span<const GpuId> subset);

/// One recursion step of the ordering: `side_a` received ranks
/// [rank_low, rank_low + |side_a| - 1], `side_b` the rest up to rank_high.
struct OrderingSplit {
  int rank_low = 0;
  int rank_high = 0;
  std::vector<GpuId> side_a;
  std::vector<GpuId> side_b;
  double cut_weight = 0.0;
};

struct DeviceOrdering {
  std::vector<GpuId> order;     // v_1 .. v_V
  std::map<GpuId, int> rank;    // GPU id -> 1..V
  std::vector<OrderingSplit> splits;

  /// Devices v_first .. v_last (1-based, inclusive).
  std::vector<GpuId> slice(int first, int last) const {
    return {order.begin() + (first - 1), order.begin() + last};
  }
};

/// Recursive min-cut device ordering: split the GPU graph by its global min
/// cut, give the low ranks to the side holding the smallest id, recurse.
DeviceOrdering rdo(const ClusterGraph& cluster);

}  // namespace syncpipe
