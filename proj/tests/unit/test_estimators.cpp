#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "rcmlab/estimators.hpp"

namespace rcmlab {
namespace {

const ConnectionFunction kDisk = ConnectionFunction::hard_disk();

RunOptions workers(unsigned w) {
  RunOptions r;
  r.workers = w;
  return r;
}

/// Left-right crossing of B(s) decided directly on the sites present at lambda.
bool spans_at(const PointSet& pts, const ConnectionFunction& phi, double lambda) {
  std::vector<Site> v;
  const double unit2 = pts.unit * pts.unit;
  for (const Site& s : pts.sites) {
    if (s.arrival < lambda * unit2) v.push_back(s);
  }
  const ComponentSummary c = connected_components(build_edges(v, phi, EdgeMarks(pts.streams().edges)), v.size(), true);
  const double edge = pts.box.half() - phi.range();
  std::set<std::uint32_t> left;
  std::set<std::uint32_t> right;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].pos.x <= -edge) left.insert(c.labels[i]);
    if (v[i].pos.x >= edge) right.insert(c.labels[i]);
  }
  for (auto l : left) {
    if (right.count(l)) return true;
  }
  return false;
}

TEST(Theta, ZeroIntensity) {
  const ThetaEstimate t = estimate_theta(kDisk, 0.0, StoppingRule{}, 100, 1);
  EXPECT_EQ(t.theta_hat.value, 0.0);
  EXPECT_DOUBLE_EQ(t.pi_hat.at(1), 1.0);
}

TEST(Theta, RejectsTooFewReplicates) {
  EXPECT_THROW(estimate_theta(kDisk, 1.0, StoppingRule{}, 99, 1), std::invalid_argument);
  EXPECT_THROW(estimate_theta(kDisk, -1.0, StoppingRule{}, 100, 1), std::invalid_argument);
}

TEST(Theta, OutcomesPartitionUnity) {
  ThetaOptions opt;
  opt.k_report = 20;
  const ThetaEstimate t = estimate_theta(kDisk, 1.3, StoppingRule{300, 12.0}, 400, 3, opt);
  double pi_sum = 0.0;
  for (auto [k, p] : t.pi_hat) {
    EXPECT_LE(k, 20u);
    EXPECT_GE(k, 1u);
    pi_sum += p;
  }
  EXPECT_NEAR(t.theta_hat.value + pi_sum + t.residual, 1.0, 1e-12);
  EXPECT_NEAR(t.theta_hat.value, t.escaped_fraction + t.capped_fraction, 1e-12);
  ASSERT_EQ(t.outcomes.size(), 400u);
  for (std::size_t i = 0; i < t.outcomes.size(); ++i) EXPECT_EQ(t.outcomes[i].replicate, i);
  EXPECT_GT(t.theta_hat.value, 0.0);
  EXPECT_GT(pi_sum, 0.0);
}

TEST(Theta, NondecreasingInLambdaReplicateByReplicate) {
  const StoppingRule rule{400, 12.0};
  std::vector<ThetaEstimate> ts;
  for (double lambda : {0.8, 1.2, 1.6, 2.0}) ts.push_back(estimate_theta(kDisk, lambda, rule, 200, 11));
  for (std::size_t j = 1; j < ts.size(); ++j) {
    EXPECT_LE(ts[j - 1].theta_hat.value, ts[j].theta_hat.value);
    for (std::size_t r = 0; r < 200; ++r) {
      if (ts[j - 1].outcomes[r].status != ClusterStatus::exhausted) {
        EXPECT_NE(ts[j].outcomes[r].status, ClusterStatus::exhausted);
      } else if (ts[j].outcomes[r].status == ClusterStatus::exhausted) {
        EXPECT_LE(ts[j - 1].outcomes[r].size, ts[j].outcomes[r].size);
      }
    }
  }
}

TEST(Theta, ScaleEquivariance) {
  const StoppingRule rule{500, 10.0};
  const StoppingRule wide{500, 20.0};
  const ThetaEstimate a = estimate_theta(kDisk, 1.6, rule, 300, 5);
  const ThetaEstimate b = estimate_theta(kDisk.scaled(2.0), 0.4, wide, 300, 5);
  EXPECT_NEAR(a.theta_hat.value, b.theta_hat.value, 3.0 * combined_sigma(a.theta_hat, b.theta_hat) + 1e-12);
  std::size_t same = 0;
  for (std::size_t r = 0; r < 300; ++r) {
    same += a.outcomes[r].size == b.outcomes[r].size && a.outcomes[r].status == b.outcomes[r].status;
  }
  EXPECT_GE(same, 297u);
}

TEST(Theta, IndependentOfWorkerCount) {
  ThetaOptions one;
  one.run = workers(1);
  ThetaOptions four;
  four.run = workers(4);
  const ThetaEstimate a = estimate_theta(kDisk, 1.5, StoppingRule{300, 10.0}, 150, 8, one);
  const ThetaEstimate b = estimate_theta(kDisk, 1.5, StoppingRule{300, 10.0}, 150, 8, four);
  for (std::size_t r = 0; r < 150; ++r) {
    EXPECT_EQ(a.outcomes[r].size, b.outcomes[r].size);
    EXPECT_EQ(a.outcomes[r].task_seed, b.outcomes[r].task_seed);
  }
  EXPECT_EQ(a.theta_hat.value, b.theta_hat.value);
}

TEST(LambdaC, SpanningThresholdOfAChain) {
  PointSet p = sample_points(0.0, BoxSpec(4.0), 1, 0);
  const double xs[] = {-1.5, -0.75, 0.0, 0.75, 1.5};
  const double arrivals[] = {0.1, 0.5, 0.3, 0.2, 0.4};
  for (int i = 0; i < 5; ++i) p.sites.push_back({{xs[i], 0.0}, static_cast<VertexId>(i + 1), arrivals[i]});
  EXPECT_DOUBLE_EQ(spanning_threshold(p, kDisk), 0.5);
  p.sites.pop_back();
  EXPECT_TRUE(std::isinf(spanning_threshold(p, kDisk)));
}

TEST(LambdaC, SpanningThresholdMatchesDirectCheck) {
  const auto phi = ConnectionFunction::linear_ramp(1.2);
  for (std::uint64_t r = 0; r < 25; ++r) {
    const PointSet p = sample_points(4.0, BoxSpec(10.0), 13, r, phi.range());
    const double t = spanning_threshold(p, phi);
    ASSERT_TRUE(std::isfinite(t));
    EXPECT_TRUE(spans_at(p, phi, t * (1 + 1e-9)));
    EXPECT_FALSE(spans_at(p, phi, t * (1 - 1e-9)));
  }
}

TEST(LambdaC, EscapeThresholdMatchesGrowth) {
  for (std::uint64_t r = 0; r < 25; ++r) {
    const ReplicateStreams st(3, r);
    const PoissonPlane top(4.0, 1.0, st.points);
    const double t = escape_threshold(top, st.edges, kDisk, 6.0);
    ASSERT_TRUE(std::isfinite(t));
    for (double f : {1 - 1e-9, 1 + 1e-9}) {
      const ClusterResult c = grow_cluster(SeedRegion::point({0.0, 0.0}), PoissonPlane(t * f, 1.0, st.points),
                                           st.edges, kDisk, StoppingRule{1000000, 6.0});
      EXPECT_EQ(c.status == ClusterStatus::escaped, f > 1.0) << "replicate " << r;
    }
  }
}

TEST(LambdaC, BracketStructureAndExactScaling) {
  LambdaCCriterion crit;
  crit.replicates = 60;
  const std::vector<double> s{16.0, 32.0};
  const LambdaCBracket b = estimate_lambda_c(kDisk, s, crit, 2, workers(1));
  EXPECT_LT(b.lower, b.upper);
  ASSERT_EQ(b.per_s.size(), 2u);
  for (const CrossingStats& cs : b.per_s) {
    EXPECT_LE(cs.upper - cs.lower, crit.width + 1e-12);
    EXPECT_GE(cs.lower, b.lower);
    EXPECT_LE(cs.upper, b.upper);
    EXPECT_EQ(cs.thresholds.size(), 60u);
    EXPECT_LE(threshold_frequency(cs.thresholds, cs.lower).value, crit.level);
    EXPECT_GE(threshold_frequency(cs.thresholds, cs.upper).value, crit.level);
    EXPECT_TRUE(cs.monotone);
    EXPECT_GE(threshold_frequency(cs.thresholds, 4.0 * b.upper).value, 0.95);
  }

  const std::vector<double> s2{32.0, 64.0};
  const LambdaCBracket wide = estimate_lambda_c(kDisk.scaled(2.0), s2, crit, 2, workers(1));
  EXPECT_NEAR(wide.lower, b.lower / 4.0, 1e-9);
  EXPECT_NEAR(wide.upper, b.upper / 4.0, 1e-9);
}

TEST(LambdaC, ThetaCriterion) {
  LambdaCCriterion crit;
  crit.kind = LambdaCCriterion::Kind::theta_threshold;
  crit.replicates = 60;
  const std::vector<double> s{8.0, 16.0};
  const LambdaCBracket b = estimate_lambda_c(kDisk, s, crit, 4, workers(1));
  EXPECT_LT(b.lower, b.upper);
  for (const CrossingStats& cs : b.per_s) {
    EXPECT_LE(threshold_frequency(cs.thresholds, cs.lower).value, crit.tau);
    EXPECT_GE(threshold_frequency(cs.thresholds, cs.upper).value, crit.tau);
  }
}

TEST(LambdaC, Validation) {
  LambdaCCriterion crit;
  const std::vector<double> one{16.0};
  EXPECT_THROW(estimate_lambda_c(kDisk, one, crit, 1), std::invalid_argument);
  crit.width = 0.0;
  const std::vector<double> two{16.0, 32.0};
  EXPECT_THROW(estimate_lambda_c(kDisk, two, crit, 1), std::invalid_argument);
}

TEST(LambdaC, ThresholdFrequencyCounts) {
  const std::vector<double> t{0.5, 1.0, 1.5, INFINITY};
  EXPECT_DOUBLE_EQ(threshold_frequency(t, 1.2).value, 0.5);
  EXPECT_DOUBLE_EQ(threshold_frequency(t, 0.5).value, 0.0);
  EXPECT_DOUBLE_EQ(threshold_frequency(t, 1e300).value, 0.75);
}

TEST(Mecke, ZeroIntensity) {
  const MeckeReport m = mecke_check_Ns(kDisk, 0.0, 1.0, 16.0, 50, 1);
  EXPECT_EQ(m.lhs.value, 0.0);
  EXPECT_EQ(m.rhs.value, 0.0);
  const MeckeSecondReport s = mecke_check_second(kDisk, 0.0, 16.0, 50, 1);
  EXPECT_EQ(s.lhs.value, 0.0);
  EXPECT_EQ(s.rhs.value, 0.0);
}

TEST(Mecke, FirstOrderCompatibleSmall) {
  const MeckeReport m = mecke_check_Ns(kDisk, 1.0, 1.0, 10.0, 600, 7);
  EXPECT_TRUE(m.compatible) << m.lhs.value << " vs " << m.rhs.value << " sigma " << m.sigma;
  EXPECT_GT(m.lhs.value, 0.0);
  EXPECT_NEAR(m.sigma, combined_sigma(m.lhs, m.rhs), 1e-12);
}

TEST(Mecke, SecondOrderCompatibleSmall) {
  const MeckeSecondReport m = mecke_check_second(kDisk, 2.0, 16.0, 300, 7);
  EXPECT_TRUE(m.compatible) << m.lhs.value << " vs " << m.rhs.value << " sigma " << m.sigma;
  EXPECT_NEAR(m.rhs.value, 4.0 * std::pow(16.0, 4) * m.both_fraction.value, 1e-6 * m.rhs.value);
}

TEST(Mecke, RejectsKOutsideBox) {
  EXPECT_THROW(mecke_check_Ns(kDisk, 1.0, 8.0, 16.0, 10, 1), std::invalid_argument);
}

TEST(Giant, ZeroIntensityAllZero) {
  const GiantStatistics g = giant_statistics(kDisk, 0.0, 16.0, 20, 1);
  for (const GiantRow& r : g.rows) {
    EXPECT_EQ(r.L1_frac, 0.0);
    EXPECT_EQ(r.L2_frac, 0.0);
  }
  EXPECT_EQ(g.L1.value, 0.0);
}

TEST(Giant, RowsIndependentOfWorkersAndOrdered) {
  const GiantStatistics a = giant_statistics(kDisk, 1.5, 24.0, 30, 5, workers(1));
  const GiantStatistics b = giant_statistics(kDisk, 1.5, 24.0, 30, 5, workers(4));
  ASSERT_EQ(a.rows.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(a.rows[i].replicate, i);
    EXPECT_EQ(a.rows[i].L1_frac, b.rows[i].L1_frac);
    EXPECT_EQ(a.rows[i].L2_frac, b.rows[i].L2_frac);
    EXPECT_GE(a.rows[i].L1_frac, a.rows[i].L2_frac);
  }
}

TEST(Giant, MatchesDirectGiantFraction) {
  const GiantStatistics g = giant_statistics(kDisk, 1.0, 12.0, 5, 9);
  for (const GiantRow& row : g.rows) {
    const auto [l1, l2] = giant_fraction(sample_points(1.0, BoxSpec(12.0), giant_stream(9, 12.0), row.replicate), kDisk);
    EXPECT_EQ(row.L1_frac, l1);
    EXPECT_EQ(row.L2_frac, l2);
  }
}

TEST(Fkg, SelfPairCovarianceIsVariance) {
  const std::vector<std::pair<IncreasingEvent, IncreasingEvent>> pairs{{event_L1_at_least(1.0), event_L1_at_least(1.0)},
                                                                       {event_nonempty(), event_nonempty()}};
  const FkgReport r = fkg_sanity(kDisk, 0.02, 8.0, pairs, 400, 3);
  for (const CovarianceReport& c : r.pairs) {
    EXPECT_NEAR(c.covariance, c.p_first * (1.0 - c.p_first) * 400.0 / 399.0, 1e-12);
    EXPECT_GE(c.covariance, 0.0);
    EXPECT_TRUE(c.ok);
  }
  EXPECT_TRUE(r.ok);
}

TEST(Fkg, ZeroIntensityConstantIndicators) {
  const std::vector<std::pair<IncreasingEvent, IncreasingEvent>> pairs{{event_L1_at_least(1.0), event_disk_to_boundary(1.0)}};
  const FkgReport r = fkg_sanity(kDisk, 0.0, 16.0, pairs, 50, 1);
  EXPECT_EQ(r.pairs[0].covariance, 0.0);
  EXPECT_EQ(r.pairs[0].p_first, 0.0);
  EXPECT_TRUE(r.ok);
}

TEST(Fkg, IncreasingEventsPositivelyAssociated) {
  const std::vector<std::pair<IncreasingEvent, IncreasingEvent>> pairs{
      {event_L1_at_least(0.5 * 1.6 * 0.5 * 16.0 * 16.0), event_disk_to_boundary(1.0)}};
  const FkgReport r = fkg_sanity(kDisk, 1.6, 16.0, pairs, 300, 2);
  EXPECT_TRUE(r.ok) << r.pairs[0].covariance << " sigma " << r.pairs[0].sigma;
}

}  // namespace
}  // namespace rcmlab
