#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "syncpipe/model.hpp"
#include "syncpipe/ordering.hpp"

namespace syncpipe::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool near(double a, double b, double rel = 1e-9) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

inline ModelProfile make_profile(const std::vector<double>& fwd, const std::vector<double>& bwd,
                                 const std::vector<double>& params, const std::vector<double>& fwd_bytes,
                                 const std::vector<double>& bwd_bytes) {
  ModelProfile p;
  p.name = "test";
  for (std::size_t l = 0; l < fwd.size(); ++l) {
    p.layers.push_back({static_cast<int>(l) + 1, fwd[l], bwd[l], params[l]});
  }
  for (std::size_t l = 0; l + 1 < fwd.size(); ++l) {
    p.edges.push_back({static_cast<int>(l) + 1, static_cast<int>(l) + 2, fwd_bytes[l], bwd_bytes[l]});
  }
  return p;
}

// Two layers (1 s fwd, 2 s bwd, 1e9 parameter bytes each, 1e9 bytes each way
// between them) on two GPUs joined by 1e9 B/s, two microbatches.
inline ModelProfile t1_profile() { return make_profile({1, 1}, {2, 2}, {1e9, 1e9}, {1e9}, {1e9}); }
inline ClusterGraph t1_cluster() { return ClusterGraph::uniform(2, 1e9); }

// One layer per GPU.
inline Plan t1_plan_split(int microbatches = 2) {
  Plan p;
  p.microbatch_count = microbatches;
  p.stages = {{1, 1, 1, {1}}, {2, 2, 2, {2}}};
  return p;
}

// Both layers replicated on both GPUs.
inline Plan t1_plan_replicated(int microbatches = 2) {
  Plan p;
  p.microbatch_count = microbatches;
  p.stages = {{1, 1, 2, {1, 2}}};
  return p;
}

// 24 identical layers on 8 GPUs, uniform 1e9 B/s.
inline ModelProfile uniform24_profile() {
  const int L = 24;
  return make_profile(std::vector<double>(L, 0.01), std::vector<double>(L, 0.01), std::vector<double>(L, 50e6),
                      std::vector<double>(L - 1, 10e6), std::vector<double>(L - 1, 10e6));
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline ModelProfile random_profile(std::mt19937_64& rng, int layers) {
  std::vector<double> f, b, a, df, db;
  for (int l = 0; l < layers; ++l) {
    f.push_back(log_uniform(rng, 1e-3, 1e-1));
    b.push_back(log_uniform(rng, 1e-3, 2e-1));
    a.push_back(log_uniform(rng, 1e6, 1e9));
  }
  for (int l = 0; l + 1 < layers; ++l) {
    df.push_back(log_uniform(rng, 1e5, 1e9));
    db.push_back(log_uniform(rng, 1e5, 1e9));
  }
  return make_profile(f, b, a, df, db);
}

inline ClusterGraph random_cluster(std::mt19937_64& rng, int gpus, double lo = 1e8, double hi = 1e10) {
  Eigen::MatrixXd bw = Eigen::MatrixXd::Zero(gpus, gpus);
  for (int i = 0; i < gpus; ++i) {
    for (int j = i + 1; j < gpus; ++j) bw(i, j) = bw(j, i) = log_uniform(rng, lo, hi);
  }
  std::vector<GpuId> ids(gpus);
  for (int i = 0; i < gpus; ++i) ids[i] = i + 1;
  return ClusterGraph(ids, bw);
}

inline ClusterGraph cluster_from_matrix(const Eigen::MatrixXd& bw) {
  std::vector<GpuId> ids(bw.rows());
  for (int i = 0; i < bw.rows(); ++i) ids[i] = i + 1;
  return ClusterGraph(ids, bw);
}

// Random valid plan: random interval partition, random disjoint GPU sets
// (possibly leaving GPUs idle).
inline Plan random_plan(std::mt19937_64& rng, int L, int V, int M) {
  const int stages = uniform_int(rng, 1, std::min(L, V));
  std::vector<int> layer_cuts(L - 1);
  std::iota(layer_cuts.begin(), layer_cuts.end(), 1);
  std::shuffle(layer_cuts.begin(), layer_cuts.end(), rng);
  layer_cuts.resize(stages - 1);
  std::sort(layer_cuts.begin(), layer_cuts.end());
  std::vector<GpuId> gpus(V);
  std::iota(gpus.begin(), gpus.end(), 1);
  std::shuffle(gpus.begin(), gpus.end(), rng);
  const int used = uniform_int(rng, stages, V);
  std::vector<int> dev_cuts(used - 1);
  std::iota(dev_cuts.begin(), dev_cuts.end(), 1);
  std::shuffle(dev_cuts.begin(), dev_cuts.end(), rng);
  dev_cuts.resize(stages - 1);
  std::sort(dev_cuts.begin(), dev_cuts.end());
  Plan plan;
  plan.microbatch_count = M;
  int layer = 1, dev = 0;
  for (int n = 0; n < stages; ++n) {
    const int last = n + 1 < stages ? layer_cuts[n] : L;
    const int dev_end = n + 1 < stages ? dev_cuts[n] : used;
    plan.stages.push_back({n + 1, layer, last, {gpus.begin() + dev, gpus.begin() + dev_end}});
    layer = last + 1;
    dev = dev_end;
  }
  return plan;
}

// --- Independent reference computations -------------------------------------

// All-microbatch workload of a plan straight from the cost definitions.
inline double reference_workload(const Plan& plan, const ModelProfile& profile, const ClusterGraph& cluster) {
  const double M = plan.microbatch_count;
  double w = 0.0;
  for (const Stage& s : plan.stages) {
    double compute = 0.0, params = 0.0;
    for (int l = s.layer_start; l <= s.layer_end; ++l) {
      compute += profile.layers[l - 1].fwd_time + profile.layers[l - 1].bwd_time;
      params += profile.layers[l - 1].param_bytes;
    }
    const double k = static_cast<double>(s.devices.size());
    double term = M * compute / k;
    if (s.devices.size() > 1) {
      double bmin = kInf;
      for (GpuId u : s.devices)
        for (GpuId v : s.devices)
          if (u != v) bmin = std::min(bmin, cluster.bandwidth(u, v));
      term += 2.0 * (k - 1.0) * params / (k * bmin);
    }
    w = std::max(w, term);
  }
  for (std::size_t n = 0; n + 1 < plan.stages.size(); ++n) {
    const Stage& a = plan.stages[n];
    const Stage& b = plan.stages[n + 1];
    double bmin = kInf;
    for (GpuId u : a.devices)
      for (GpuId v : b.devices) bmin = std::min(bmin, cluster.bandwidth(u, v));
    const InterLayerEdge& e = profile.edges[a.layer_end - 1];
    const double links = static_cast<double>(a.devices.size() * b.devices.size());
    w = std::max(w, M * (e.fwd_bytes + e.bwd_bytes) / (links * bmin));
  }
  return w;
}

// Exhaustive search over interval partitions of layers 1..l into xi stages and
// compositions of v_1..v_i into xi contiguous slices, last slice of size r.
inline double reference_contiguous_w(const ModelProfile& profile, const ClusterGraph& cluster,
                                     const std::vector<GpuId>& order, int M, int l, int i, int xi, int r) {
  if (xi < 1 || l < xi || i < xi || r < 1 || r > i) return kInf;
  if (xi == 1 && r != i) return kInf;
  double best = kInf;
  std::vector<int> cuts;  // layer ends of stages 1..xi-1
  std::vector<int> sizes; // device counts of stages 1..xi-1
  std::function<void(int, int)> layers_rec;
  std::function<void(int, int)> devices_rec;
  auto evaluate = [&] {
    Plan plan;
    plan.microbatch_count = M;
    int layer = 1, device = 0;
    for (int n = 0; n < xi; ++n) {
      const int last_layer = n + 1 < xi ? cuts[n] : l;
      const int count = n + 1 < xi ? sizes[n] : r;
      Stage s{n + 1, layer, last_layer, {order.begin() + device, order.begin() + device + count}};
      plan.stages.push_back(s);
      layer = last_layer + 1;
      device += count;
    }
    // reference_workload reads edges by layer id; truncated prefixes are fine.
    best = std::min(best, reference_workload(plan, profile, cluster));
  };
  devices_rec = [&](int n, int used) {
    if (n == xi - 1) {
      if (used + r == i) evaluate();
      return;
    }
    for (int c = 1; used + c + r + (xi - 2 - n) <= i; ++c) {
      sizes.push_back(c);
      devices_rec(n + 1, used + c);
      sizes.pop_back();
    }
  };
  layers_rec = [&](int n, int start) {
    if (n == xi - 1) {
      devices_rec(0, 0);
      return;
    }
    for (int end = start; end + (xi - 1 - n) <= l; ++end) {
      cuts.push_back(end);
      layers_rec(n + 1, end + 1);
      cuts.pop_back();
    }
  };
  layers_rec(0, 1);
  return best;
}

// Minimum cut by enumerating every 2-partition with vertex 0 on side A.
struct ReferenceCut {
  double weight = kInf;
  std::vector<bool> side_a;
};

inline ReferenceCut reference_min_cut(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  ReferenceCut best;
  // bit v-1 set: vertex v on side B
  for (unsigned mask = 1; mask < (1u << (n - 1)); ++mask) {
    std::vector<bool> in_a(n, true);
    for (int v = 1; v < n; ++v) in_a[v] = !((mask >> (v - 1)) & 1u);
    double cut = 0.0;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (in_a[u] != in_a[v]) cut += w(u, v);
    if (cut < best.weight) {
      best.weight = cut;
      best.side_a = in_a;
    }
  }
  return best;
}

}  // namespace syncpipe::testing
