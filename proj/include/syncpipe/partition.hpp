#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "syncpipe/cost.hpp"
#include "syncpipe/model.hpp"
#include "syncpipe/ordering.hpp"

namespace syncpipe {

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

/// Memo key of the partition DP: first `l` layers in `xi` stages over devices
/// v_1..v_i, last stage replicated `r` times.
struct DpKey {
  int l = 0;
  int xi = 0;
  int r = 0;
  int i = 0;
};

struct PrmResult {
  double w = kInfeasible;
  std::vector<Stage> stages;  // empty when infeasible

  bool feasible() const { return w < kInfeasible; }
};

/// Dynamic program over the device ordering that minimises the largest
/// all-microbatch time of any stage (AllReduce included) or channel. Stage
/// device sets are contiguous slices of the ordering and every device in
/// v_1..v_i is used. One solver instance memoises across all (xi, r) queries;
/// it is not safe for concurrent use.
class PrmSolver {
 public:
  struct Options {
    bool replication = true;  // false restricts every stage to one GPU
    bool memoize = true;
  };

  PrmSolver(const ModelProfile& profile, const ClusterGraph& cluster, DeviceOrdering ordering,
            int microbatches, Options options);
  PrmSolver(const ModelProfile& profile, const ClusterGraph& cluster, DeviceOrdering ordering,
            int microbatches)
      : PrmSolver(profile, cluster, std::move(ordering), microbatches, Options{}) {}

  /// W(l, xi, r, i) together with the argmin stage list over v_1..v_i.
  PrmResult prm(int l, int i, int xi, int r);
  double w(const DpKey& key) { return evaluate(key).w; }

  const DeviceOrdering& ordering() const { return ordering_; }
  int layer_count() const { return sums_.layer_count(); }
  int device_count() const { return static_cast<int>(ordering_.order.size()); }
  int microbatches() const { return microbatches_; }
  std::size_t memo_size() const { return memo_.size(); }

 private:
  struct Entry {
    double w = kInfeasible;
    int split_layer = 0;        // l' of the argmin, 0 for a single stage
    int split_replication = 0;  // r' of the argmin
  };

  Entry evaluate(const DpKey& key);
  Entry compute(const DpKey& key);
  // Min bandwidth inside the ordered slice [a, b] and across [a, b] x [b+1, c].
  double slice_min(int a, int b) const { return slice_min_(a - 1, b - 1); }
  double cross_min(int a, int b, int c) const;
  std::uint64_t pack(const DpKey& key) const;

  LayerSums sums_;
  Eigen::VectorXd boundary_bytes_;  // d^f + d^b after layer l, index l
  DeviceOrdering ordering_;
  int microbatches_;
  Options options_;
  Eigen::MatrixXd slice_min_;
  std::vector<double> cross_min_;
  std::unordered_map<std::uint64_t, Entry> memo_;
};

/// Free-function form without shared memo.
PrmResult prm(const ModelProfile& profile, const ClusterGraph& cluster, const DeviceOrdering& ordering,
              int microbatches, int l, int i, int xi, int r);

struct PartitionChoice {
  double w = kInfeasible;
  int replication = 0;  // r of the last stage
  std::optional<Plan> plan;

  bool feasible() const { return plan.has_value(); }
};

/// min over r in 1..V of W(L, xi, r, V).
PartitionChoice best_partition(PrmSolver& solver, int xi);

}  // namespace syncpipe
