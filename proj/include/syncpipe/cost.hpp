#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "syncpipe/model.hpp"

namespace syncpipe {

/// Prefix sums over the layer chain so that interval totals are O(1).
class LayerSums {
 public:
  explicit LayerSums(const ModelProfile& profile);

  int layer_count() const { return static_cast<int>(fwd_.size()) - 1; }
  double fwd(int first, int last) const { return fwd_(last) - fwd_(first - 1); }
  double bwd(int first, int last) const { return bwd_(last) - bwd_(first - 1); }
  double compute(int first, int last) const { return fwd(first, last) + bwd(first, last); }
  double params(int first, int last) const { return params_(last) - params_(first - 1); }

 private:
  Eigen::VectorXd fwd_;
  Eigen::VectorXd bwd_;
  Eigen::VectorXd params_;
};

struct StageTimes {
  double fwd = 0.0;
  double bwd = 0.0;
  double total() const { return fwd + bwd; }
};

struct CommTimes {
  double fwd = 0.0;  // c^f, activations n -> n+1
  double bwd = 0.0;  // c^b, gradients n+1 -> n
  double total() const { return fwd + bwd; }
};

/// Per-microbatch compute time of layers [first, last] split over k replicas.
StageTimes stage_compute_time(const ModelProfile& profile, int first, int last, int k);

/// Ring AllReduce time of layers [first, last] over `devices`:
/// 2(k-1) * sum(params) / (k * min pairwise bandwidth). Zero for k = 1.
double allreduce_time(const ModelProfile& profile, int first, int last,
                      std::span<const GpuId> devices, const ClusterGraph& cluster);

/// Closed form used by both the cost module and the partition DP.
inline double allreduce_time(double param_bytes, int k, double min_bandwidth) {
  if (k <= 1) return 0.0;
  return 2.0 * (k - 1) * param_bytes / (k * min_bandwidth);
}

/// Transfer times across the boundary after layer `boundary`. Data is spread
/// evenly over all |left| * |right| links and limited by the slowest one.
CommTimes interstage_comm_time(const ModelProfile& profile, int boundary,
                               std::span<const GpuId> left, std::span<const GpuId> right,
                               const ClusterGraph& cluster);

/// Block durations of a concrete plan, one entry per stage / channel.
struct PlanCosts {
  std::vector<StageTimes> stage;      // index n - 1
  std::vector<CommTimes> channel;     // index n - 1, channel n -> n+1
  std::vector<double> allreduce;      // index n - 1, zero when unreplicated
};

PlanCosts plan_costs(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster);

/// Plan-independent quantities of the heterogeneity bound.
struct BoundTerms {
  double p_max = 0.0;  // max_l (p^f_l + p^b_l)
  double d_max = 0.0;  // max_l (d^f_{l,l+1} + d^b_{l+1,l}); 0 for a single layer
  double gamma = 0.0;  // sum_l (p^f_l + p^b_l) / V
  double phi = 0.0;    // max(p_max b_max, d_max) / gamma * (1/b_min - 1/b_max)
};

BoundTerms bound_terms(const ModelProfile& profile, const ClusterGraph& cluster);

struct CostSummary {
  Eigen::VectorXd per_stage_compute;  // sum(p^f + p^b) / k
  Eigen::VectorXd per_channel_comm;   // c^f + c^b
  Eigen::VectorXd allreduce;          // A_s
  double cycle_time = 0.0;            // C, AllReduce excluded
  double workload = 0.0;              // W over all M microbatches
  double gamma = 0.0;
  double phi = 0.0;
};

CostSummary cost_summary(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster);

}  // namespace syncpipe
