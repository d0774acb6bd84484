#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support.hpp"
#include "syncpipe/errors.hpp"
#include "syncpipe/min_cut.hpp"
#include "syncpipe/ordering.hpp"

namespace syncpipe {
namespace {

ClusterGraph three_gpus() {
  Eigen::MatrixXd bw(3, 3);
  bw << 0, 10, 1, 10, 0, 1, 1, 1, 0;
  return testing::cluster_from_matrix(bw);
}

TEST(GlobalMinCut, IsolatesWeakVertex) {
  Eigen::MatrixXd bw = Eigen::MatrixXd::Constant(4, 4, 50.0);
  bw.col(3).setConstant(10.0);
  bw.row(3).setConstant(10.0);
  const ClusterGraph c = testing::cluster_from_matrix(bw);
  const std::vector<GpuId> all{1, 2, 3, 4};
  const GpuCut cut = global_min_cut(c, all);
  EXPECT_EQ(cut.side_a, (std::vector<GpuId>{1, 2, 3}));
  EXPECT_EQ(cut.side_b, (std::vector<GpuId>{4}));
  EXPECT_DOUBLE_EQ(cut.weight, 30.0);
}

TEST(GlobalMinCut, TwoAndThreeVertices) {
  const ClusterGraph two = ClusterGraph::uniform(2, 1e9);
  const std::vector<GpuId> pair{2, 1};
  const GpuCut a = global_min_cut(two, pair);
  EXPECT_EQ(a.side_a, std::vector<GpuId>{1});
  EXPECT_EQ(a.side_b, std::vector<GpuId>{2});
  EXPECT_DOUBLE_EQ(a.weight, 1e9);

  const std::vector<GpuId> all{1, 2, 3};
  const GpuCut b = global_min_cut(three_gpus(), all);
  EXPECT_EQ(b.side_a, (std::vector<GpuId>{1, 2}));
  EXPECT_EQ(b.side_b, std::vector<GpuId>{3});
  EXPECT_DOUBLE_EQ(b.weight, 2.0);

  const std::vector<GpuId> lonely{1};
  EXPECT_THROW(global_min_cut(two, lonely), ValidationError);
}

TEST(GlobalMinCut, MatchesEnumeration) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const int V = testing::uniform_int(rng, 2, 8);
    const ClusterGraph c = testing::random_cluster(rng, V, 1.0, 100.0);
    const GpuCut cut = global_min_cut(c, c.gpu_ids());
    const testing::ReferenceCut ref = testing::reference_min_cut(c.bandwidth_matrix());
    EXPECT_TRUE(testing::near(cut.weight, ref.weight, 1e-12)) << cut.weight << " vs " << ref.weight;
    // reported sides really have the reported weight
    std::vector<bool> mask(V, false);
    for (GpuId g : cut.side_a) mask[g - 1] = true;
    Eigen::MatrixXd w = c.bandwidth_matrix();
    w.diagonal().setZero();
    EXPECT_TRUE(testing::near(cut_weight(w, mask), cut.weight, 1e-12));
    EXPECT_EQ(cut.side_a.front(), 1);
    EXPECT_EQ(cut.side_a.size() + cut.side_b.size(), static_cast<std::size_t>(V));
  }
}

TEST(GlobalMinCut, IntegerWeightsWithTies) {
  // small integer weights produce many equal cuts
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int V = testing::uniform_int(rng, 2, 7);
    Eigen::MatrixXd bw = Eigen::MatrixXd::Zero(V, V);
    for (int i = 0; i < V; ++i)
      for (int j = i + 1; j < V; ++j) bw(i, j) = bw(j, i) = testing::uniform_int(rng, 1, 3);
    const MinCutResult<double> r = stoer_wagner_min_cut(bw);
    EXPECT_EQ(r.weight, testing::reference_min_cut(bw).weight);
  }
}

TEST(Rdo, SingleGpu) {
  const DeviceOrdering o = rdo(ClusterGraph::uniform(1, 1e9));
  EXPECT_EQ(o.order, std::vector<GpuId>{1});
  EXPECT_EQ(o.rank.at(1), 1);
  EXPECT_TRUE(o.splits.empty());
}

TEST(Rdo, CutsWeakGpuFirst) {
  const DeviceOrdering o = rdo(three_gpus());
  EXPECT_EQ(o.order, (std::vector<GpuId>{1, 2, 3}));
  ASSERT_EQ(o.splits.size(), 2u);
  EXPECT_EQ(o.splits[0].side_b, std::vector<GpuId>{3});
}

TEST(Rdo, ArbitraryIds) {
  const std::vector<Link> links{{7, 3, 5e9}, {7, 11, 1e8}, {3, 11, 1e8}};
  const DeviceOrdering o = rdo(ClusterGraph::from_links({7, 3, 11}, links));
  EXPECT_EQ(o.order, (std::vector<GpuId>{3, 7, 11}));
  EXPECT_EQ(o.rank.at(11), 3);
}

TEST(Rdo, RecursionStructure) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int V = testing::uniform_int(rng, 1, 8);
    const ClusterGraph c = testing::random_cluster(rng, V);
    const DeviceOrdering o = rdo(c);

    ASSERT_EQ(o.order.size(), static_cast<std::size_t>(V));
    std::set<GpuId> seen(o.order.begin(), o.order.end());
    EXPECT_EQ(seen.size(), static_cast<std::size_t>(V));
    for (int r = 1; r <= V; ++r) EXPECT_EQ(o.rank.at(o.order[r - 1]), r);

    EXPECT_EQ(o.splits.size(), static_cast<std::size_t>(V - 1));
    for (const OrderingSplit& s : o.splits) {
      const int a = static_cast<int>(s.side_a.size());
      const int b = static_cast<int>(s.side_b.size());
      EXPECT_EQ(a + b, s.rank_high - s.rank_low + 1);
      std::set<GpuId> low(o.order.begin() + (s.rank_low - 1), o.order.begin() + (s.rank_low - 1 + a));
      std::set<GpuId> high(o.order.begin() + (s.rank_low - 1 + a), o.order.begin() + s.rank_high);
      EXPECT_EQ(low, std::set<GpuId>(s.side_a.begin(), s.side_a.end()));
      EXPECT_EQ(high, std::set<GpuId>(s.side_b.begin(), s.side_b.end()));
      // each step cuts its own interval at the global minimum of the induced subgraph
      std::vector<GpuId> sub(s.side_a);
      sub.insert(sub.end(), s.side_b.begin(), s.side_b.end());
      std::sort(sub.begin(), sub.end());
      Eigen::MatrixXd w(sub.size(), sub.size());
      for (std::size_t i = 0; i < sub.size(); ++i)
        for (std::size_t j = 0; j < sub.size(); ++j) w(i, j) = i == j ? 0.0 : c.bandwidth(sub[i], sub[j]);
      EXPECT_TRUE(testing::near(s.cut_weight, testing::reference_min_cut(w).weight, 1e-12));
    }
    EXPECT_EQ(rdo(c).order, o.order);
  }
}

}  // namespace
}  // namespace syncpipe
