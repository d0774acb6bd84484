#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "syncpipe/cost.hpp"
#include "syncpipe/errors.hpp"

namespace syncpipe {
namespace {

using testing::make_profile;
using testing::near;
using testing::t1_cluster;
using testing::t1_profile;

TEST(StageCompute, ReplicationDividesTime) {
  const ModelProfile p = t1_profile();
  EXPECT_DOUBLE_EQ(stage_compute_time(p, 1, 2, 1).total(), 6.0);
  EXPECT_DOUBLE_EQ(stage_compute_time(p, 1, 2, 2).total(), 3.0);
  EXPECT_DOUBLE_EQ(stage_compute_time(p, 1, 1, 1).total(), 3.0);
  const StageTimes t = stage_compute_time(p, 1, 2, 2);
  EXPECT_DOUBLE_EQ(t.fwd, 1.0);
  EXPECT_DOUBLE_EQ(t.bwd, 2.0);
  EXPECT_THROW(stage_compute_time(p, 2, 1, 1), ValidationError);
  EXPECT_THROW(stage_compute_time(p, 1, 3, 1), ValidationError);
  EXPECT_THROW(stage_compute_time(p, 1, 1, 0), ValidationError);
}

TEST(AllReduce, RingFormula) {
  const ModelProfile p = t1_profile();
  const ClusterGraph c = t1_cluster();
  const std::vector<GpuId> one{1};
  const std::vector<GpuId> both{1, 2};
  EXPECT_EQ(allreduce_time(p, 1, 2, one, c), 0.0);
  EXPECT_DOUBLE_EQ(allreduce_time(p, 1, 2, both, c), 2.0);

  // four replicas, 4e9 parameter bytes, weakest pair 5e8 B/s
  const ModelProfile big = make_profile({1}, {1}, {4e9}, {}, {});
  Eigen::MatrixXd bw = Eigen::MatrixXd::Constant(4, 4, 2e9);
  bw(1, 3) = bw(3, 1) = 5e8;
  const ClusterGraph four = testing::cluster_from_matrix(bw);
  const std::vector<GpuId> all{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(allreduce_time(big, 1, 1, all, four), 12.0);

  const std::vector<GpuId> stranger{1, 9};
  EXPECT_THROW(allreduce_time(p, 1, 2, stranger, c), ValidationError);
}

TEST(InterStage, EvenSpreadOverLinks) {
  const ModelProfile p = t1_profile();
  const ClusterGraph c = t1_cluster();
  const std::vector<GpuId> g1{1}, g2{2};
  const CommTimes t = interstage_comm_time(p, 1, g1, g2, c);
  EXPECT_DOUBLE_EQ(t.fwd, 1.0);
  EXPECT_DOUBLE_EQ(t.bwd, 1.0);

  // 2 senders, 3 receivers, slowest cross link 1e9
  const ModelProfile wide = make_profile({1, 1}, {1, 1}, {0, 0}, {6e9}, {3e9});
  Eigen::MatrixXd bw = Eigen::MatrixXd::Constant(5, 5, 4e9);
  bw(0, 4) = bw(4, 0) = 1e9;
  const ClusterGraph five = testing::cluster_from_matrix(bw);
  const std::vector<GpuId> left{1, 2}, right{3, 4, 5};
  const CommTimes w = interstage_comm_time(wide, 1, left, right, five);
  EXPECT_DOUBLE_EQ(w.fwd, 1.0);
  EXPECT_DOUBLE_EQ(w.bwd, 0.5);

  const ModelProfile silent = make_profile({1, 1}, {1, 1}, {0, 0}, {0}, {0});
  const CommTimes z = interstage_comm_time(silent, 1, g1, g2, c);
  EXPECT_EQ(z.fwd, 0.0);
  EXPECT_EQ(z.bwd, 0.0);

  EXPECT_THROW(interstage_comm_time(p, 1, g1, g1, c), ValidationError);
  EXPECT_THROW(interstage_comm_time(p, 2, g1, g2, c), ValidationError);
}

TEST(CostSummary, SplitPlan) {
  const CostSummary s = cost_summary(testing::t1_plan_split(), t1_profile(), t1_cluster());
  EXPECT_DOUBLE_EQ(s.cycle_time, 3.0);
  EXPECT_DOUBLE_EQ(s.workload, 6.0);
  EXPECT_DOUBLE_EQ(s.per_channel_comm(0), 2.0);
  EXPECT_EQ(s.phi, 0.0);
  EXPECT_DOUBLE_EQ(s.gamma, 3.0);
}

TEST(CostSummary, ReplicatedPlan) {
  const CostSummary s = cost_summary(testing::t1_plan_replicated(), t1_profile(), t1_cluster());
  EXPECT_DOUBLE_EQ(s.per_stage_compute(0), 3.0);
  EXPECT_DOUBLE_EQ(s.allreduce(0), 2.0);
  EXPECT_DOUBLE_EQ(s.cycle_time, 3.0);
  // 2 microbatches x 3 s + 2 s AllReduce
  EXPECT_DOUBLE_EQ(s.workload, 8.0);
  EXPECT_EQ(s.per_channel_comm.size(), 0);
}

TEST(BoundTerms, HeterogeneousCluster) {
  const ModelProfile p = make_profile({1, 1}, {2, 2}, {0, 0}, {1e9}, {1e9});
  Eigen::MatrixXd bw(3, 3);
  bw << 0, 1e9, 1e9, 1e9, 0, 2e9, 1e9, 2e9, 0;
  const BoundTerms t = bound_terms(p, testing::cluster_from_matrix(bw));
  EXPECT_DOUBLE_EQ(t.p_max, 3.0);
  EXPECT_DOUBLE_EQ(t.d_max, 2e9);
  EXPECT_DOUBLE_EQ(t.gamma, 2.0);
  // max(3 * 2e9, 2e9) / 2 * (1/1e9 - 1/2e9)
  EXPECT_NEAR(t.phi, 1.5, 1e-12);
  EXPECT_EQ(bound_terms(p, ClusterGraph::uniform(3, 7e9)).phi, 0.0);
}

class CostProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{20240611};

  Plan random_plan(int L, int V, int M) { return testing::random_plan(rng, L, V, M); }
};

TEST_F(CostProperties, WorkloadMatchesDefinition) {
  for (int trial = 0; trial < 300; ++trial) {
    const int L = testing::uniform_int(rng, 1, 8);
    const int V = testing::uniform_int(rng, 1, 6);
    const ModelProfile p = testing::random_profile(rng, L);
    const ClusterGraph c = testing::random_cluster(rng, V);
    const Plan plan = random_plan(L, V, testing::uniform_int(rng, 1, 16));
    ASSERT_NO_THROW(validate_plan(plan, p, c));
    const CostSummary s = cost_summary(plan, p, c);
    EXPECT_TRUE(near(s.workload, testing::reference_workload(plan, p, c)));
    const double M = plan.microbatch_count;
    for (int n = 0; n < plan.stage_count(); ++n) {
      EXPECT_GE(s.workload * (1 + 1e-12), M * s.per_stage_compute(n) + s.allreduce(n));
      EXPECT_LE(s.per_stage_compute(n), s.cycle_time);
    }
    for (int n = 0; n + 1 < plan.stage_count(); ++n) {
      EXPECT_GE(s.workload * (1 + 1e-12), M * s.per_channel_comm(n));
      EXPECT_LE(s.per_channel_comm(n), s.cycle_time);
    }
    if (plan.replicated_stages().empty()) EXPECT_TRUE(near(s.workload, M * s.cycle_time));
  }
}

TEST_F(CostProperties, BandwidthAndTimeScaling) {
  for (int trial = 0; trial < 200; ++trial) {
    const int L = testing::uniform_int(rng, 2, 8);
    const int V = testing::uniform_int(rng, 2, 6);
    const ModelProfile p = testing::random_profile(rng, L);
    const ClusterGraph c = testing::random_cluster(rng, V);
    const Plan plan = random_plan(L, V, 4);
    const double beta = testing::log_uniform(rng, 0.1, 10.0);

    const ClusterGraph faster(c.gpu_ids(), c.bandwidth_matrix() * beta);
    const PlanCosts base = plan_costs(plan, p, c);
    const PlanCosts fast = plan_costs(plan, p, faster);
    for (std::size_t n = 0; n < base.stage.size(); ++n) {
      EXPECT_TRUE(near(fast.allreduce[n] * beta, base.allreduce[n]));
      EXPECT_EQ(fast.stage[n].total(), base.stage[n].total());
    }
    for (std::size_t n = 0; n < base.channel.size(); ++n) {
      EXPECT_TRUE(near(fast.channel[n].fwd * beta, base.channel[n].fwd));
      EXPECT_TRUE(near(fast.channel[n].bwd * beta, base.channel[n].bwd));
    }

    ModelProfile slower = p;
    for (auto& l : slower.layers) {
      l.fwd_time *= beta;
      l.bwd_time *= beta;
    }
    const CostSummary a = cost_summary(plan, p, c);
    const CostSummary b = cost_summary(plan, slower, c);
    EXPECT_TRUE(near(b.gamma, beta * a.gamma));
    for (int n = 0; n < plan.stage_count(); ++n) {
      EXPECT_TRUE(near(b.per_stage_compute(n), beta * a.per_stage_compute(n)));
      EXPECT_TRUE(near(b.allreduce(n), a.allreduce(n)));
    }
  }
}

TEST_F(CostProperties, DoublingMicrobatches) {
  for (int trial = 0; trial < 100; ++trial) {
    const int L = testing::uniform_int(rng, 1, 6);
    const int V = testing::uniform_int(rng, 1, 5);
    const ModelProfile p = testing::random_profile(rng, L);
    const ClusterGraph c = testing::random_cluster(rng, V);
    Plan plan = random_plan(L, V, testing::uniform_int(rng, 1, 8));
    const CostSummary once = cost_summary(plan, p, c);
    plan.microbatch_count *= 2;
    const CostSummary twice = cost_summary(plan, p, c);
    EXPECT_TRUE(twice.allreduce.isApprox(once.allreduce) || once.allreduce.isZero());
    double expected = 0.0;
    const double M = plan.microbatch_count;
    for (int n = 0; n < plan.stage_count(); ++n)
      expected = std::max(expected, M * once.per_stage_compute(n) + once.allreduce(n));
    for (int n = 0; n + 1 < plan.stage_count(); ++n) expected = std::max(expected, M * once.per_channel_comm(n));
    EXPECT_TRUE(near(twice.workload, expected));
  }
}

TEST(AllReduceProperties, MonotoneInBandwidth) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double params = testing::log_uniform(rng, 1e6, 1e10);
    const int k = testing::uniform_int(rng, 1, 8);
    const double b = testing::log_uniform(rng, 1e8, 1e10);
    EXPECT_GE(allreduce_time(params, k, b), allreduce_time(params, k, b * 1.5));
    if (k == 1) EXPECT_EQ(allreduce_time(params, k, b), 0.0);
  }
}

}  // namespace
}  // namespace syncpipe
