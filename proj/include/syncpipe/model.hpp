#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace syncpipe {

// Units: seconds, bytes, bytes/second. No conversions happen below the file layer.
using GpuId = int;

struct LayerProfile {
  int id = 0;
  double fwd_time = 0.0;  // per microbatch
  double bwd_time = 0.0;  // per microbatch
  double param_bytes = 0.0;
};

// Data crossing the boundary between layer `from` and `from + 1`.
struct InterLayerEdge {
  int from = 0;
  int to = 0;
  double fwd_bytes = 0.0;  // activations, from -> to
  double bwd_bytes = 0.0;  // gradients, to -> from
};

struct ModelProfile {
  std::string name;
  double microbatch_size = 1.0;  // metadata only, times are already per microbatch
  std::vector<LayerProfile> layers;
  std::vector<InterLayerEdge> edges;

  int layer_count() const { return static_cast<int>(layers.size()); }
  const LayerProfile& layer(int id) const { return layers.at(id - 1); }
  // Edge between layer l and l + 1.
  const InterLayerEdge& edge(int l) const { return edges.at(l - 1); }
};

struct Link {
  GpuId a = 0;
  GpuId b = 0;
  double bytes_per_s = 0.0;
};

/// GPU set with a dense pairwise bandwidth matrix indexed by position in
/// `gpu_ids()`. Missing entries hold NaN until validation rejects them.
class ClusterGraph {
 public:
  ClusterGraph() = default;
  ClusterGraph(std::vector<GpuId> gpu_ids, Eigen::MatrixXd bandwidth);

  /// Builds the matrix from undirected link records. A link given in one
  /// direction only is mirrored; both directions with different values are
  /// kept as-is so that validation reports the asymmetry.
  static ClusterGraph from_links(std::vector<GpuId> gpu_ids, std::span<const Link> links);

  /// All pairs share one bandwidth value.
  static ClusterGraph uniform(int gpu_count, double bytes_per_s);

  const std::vector<GpuId>& gpu_ids() const { return ids_; }
  int size() const { return static_cast<int>(ids_.size()); }
  const Eigen::MatrixXd& bandwidth_matrix() const { return bw_; }

  bool contains(GpuId id) const { return pos_.count(id) != 0; }
  int position(GpuId id) const;
  double bandwidth(GpuId a, GpuId b) const { return bw_(position(a), position(b)); }

  /// Minimum bandwidth over every unordered pair inside `devices`; +inf for fewer than two.
  double min_bandwidth(std::span<const GpuId> devices) const;
  /// Minimum bandwidth over every pair (u in left, v in right).
  double min_cross_bandwidth(std::span<const GpuId> left, std::span<const GpuId> right) const;

  double b_min() const;
  double b_max() const;

  std::vector<Link> links() const;

 private:
  std::vector<GpuId> ids_;
  std::map<GpuId, int> pos_;
  Eigen::MatrixXd bw_;
};

struct Stage {
  int index = 0;  // 1-based position in the pipeline
  int layer_start = 0;
  int layer_end = 0;
  std::vector<GpuId> devices;

  int replication() const { return static_cast<int>(devices.size()); }
  bool replicated() const { return devices.size() >= 2; }
};

struct Plan {
  std::vector<Stage> stages;
  int microbatch_count = 1;

  int stage_count() const { return static_cast<int>(stages.size()); }
  const Stage& stage(int n) const { return stages.at(n - 1); }
  /// 1-based indices of stages with replication >= 2.
  std::vector<int> replicated_stages() const;
  std::vector<GpuId> used_devices() const;
};

enum class BlockKind {
  Forward,       // F_n, stage n < |S| (or the split forward half of the last stage)
  Merged,        // FB_|S|
  Backward,      // B_n
  ForwardComm,   // X_{n -> n+1}, index = n
  BackwardComm,  // Y_{n+1 -> n}, index = n
};

/// One schedulable unit. `index` is the stage for computation blocks and the
/// channel (left stage) for communication blocks. `position` is the 1-based
/// slot in the ordered block list J, or 0 for blocks outside J (the oracle's
/// split last stage).
struct Block {
  BlockKind kind = BlockKind::Forward;
  int index = 0;
  int position = 0;

  bool is_compute() const {
    return kind == BlockKind::Forward || kind == BlockKind::Merged || kind == BlockKind::Backward;
  }
  bool is_comm() const { return !is_compute(); }
  bool forward_phase() const {
    return kind == BlockKind::Forward || kind == BlockKind::ForwardComm;
  }
  friend bool operator==(const Block&, const Block&) = default;
};

std::string block_label(const Block& block);  // "F1", "X1", "FB2", "Y1", "B1"

struct ScheduledEvent {
  Block block;
  int microbatch = 0;
  double start = 0.0;
  double end = 0.0;
};

struct Schedule {
  std::vector<ScheduledEvent> events;
  std::map<int, double> allreduce_starts;  // stage index -> e^A_s
  double makespan = 0.0;
};

// Validation. Each returns its argument unchanged or throws ValidationError
// naming the first violated invariant.
ModelProfile validate_profile(const ModelProfile& profile);
ClusterGraph validate_cluster(const ClusterGraph& cluster);
Plan validate_plan(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster);

/// GPUs of the cluster that the plan leaves idle. Planner output never has any.
std::vector<GpuId> idle_devices(const Plan& plan, const ClusterGraph& cluster);

}  // namespace syncpipe
