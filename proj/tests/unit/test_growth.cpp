#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "rcmlab/graph.hpp"
#include "rcmlab/growth.hpp"
#include "rcmlab/points.hpp"

namespace rcmlab {
namespace {

std::set<VertexId> id_set(const ClusterResult& c) { return {c.ids.begin(), c.ids.end()}; }

/// Ids of every eager component that contains a vertex satisfying `seed`.
template <class Pred>
std::set<VertexId> eager_union(std::span<const Site> v, const ConnectionFunction& phi, const EdgeMarks& marks,
                               Pred seed) {
  const ComponentSummary c = connected_components(build_edges(v, phi, marks), v.size(), true);
  std::set<std::uint32_t> labels;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (seed(v[i])) labels.insert(c.labels[i]);
  }
  std::set<VertexId> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (labels.count(c.labels[i])) out.insert(v[i].id);
  }
  return out;
}

TEST(GrowCluster, IsolatedOriginAtZeroIntensity) {
  const PoissonPlane plane(0.0, 1.0, 5);
  const ClusterResult c = grow_cluster(SeedRegion::point({0.0, 0.0}), plane, 9, ConnectionFunction::hard_disk(),
                                       StoppingRule{});
  EXPECT_EQ(c.size, 1u);
  EXPECT_EQ(c.status, ClusterStatus::exhausted);

  const ClusterResult b = grow_cluster(SeedRegion::point({0.0, 0.0}), with_origin(sample_points(0.0, BoxSpec(8.0), 1, 0)),
                                       ConnectionFunction::hard_disk(), StoppingRule::unlimited());
  EXPECT_EQ(b.size, 1u);
  EXPECT_EQ(b.status, ClusterStatus::exhausted);
}

TEST(GrowCluster, BoxedPalmOriginEqualsEagerComponent) {
  const auto phi = ConnectionFunction::hard_disk();
  for (std::uint64_t r = 0; r < 100; ++r) {
    const PalmPointSet p = with_origin(sample_points(1.0, BoxSpec(8.0), 77, r));
    const ClusterResult c = grow_cluster(SeedRegion::point({0.0, 0.0}), p, phi, StoppingRule::unlimited());
    const std::vector<Site> v = p.vertices();
    const auto oracle = eager_union(v, phi, EdgeMarks(p.base.streams().edges),
                                    [](const Site& s) { return is_palm(s.id); });
    ASSERT_EQ(id_set(c), oracle) << "replicate " << r;
    EXPECT_EQ(c.size, c.ids.size());
    EXPECT_EQ(c.status, ClusterStatus::exhausted);
  }
}

TEST(GrowCluster, SoftKernelCouplingAndSizeConsistency) {
  const auto phi = ConnectionFunction::linear_ramp(1.5);
  for (std::uint64_t r = 0; r < 40; ++r) {
    const PalmPointSet p = with_origin(sample_points(1.8, BoxSpec(12.0), 3, r, phi.range()));
    const ClusterResult c = grow_cluster(SeedRegion::point({0.0, 0.0}), p, phi, StoppingRule::unlimited());
    const auto oracle = eager_union(p.vertices(), phi, EdgeMarks(p.base.streams().edges),
                                    [](const Site& s) { return is_palm(s.id); });
    ASSERT_EQ(id_set(c), oracle);
    EXPECT_EQ(c.vertices.size(), c.size);
  }
}

TEST(GrowCluster, PlaneExhaustedClusterEqualsEagerComponent) {
  const auto phi = ConnectionFunction::hard_disk();
  const double half = 40.0;
  int compared = 0;
  for (std::uint64_t r = 0; r < 60; ++r) {
    const ReplicateStreams st(1234, r);
    const PoissonPlane plane(1.2, phi.range(), st.points);
    const StoppingRule rule{100000, 30.0};
    const ClusterResult c = grow_cluster(SeedRegion::point({0.0, 0.0}), plane, st.edges, phi, rule);
    if (c.status != ClusterStatus::exhausted) continue;
    std::vector<Site> v = sample_region(plane, Domain::box(BoxSpec(2.0 * half)));
    v.push_back(palm_site(0, {0.0, 0.0}));
    ASSERT_EQ(id_set(c), eager_union(v, phi, EdgeMarks(st.edges), [](const Site& s) { return is_palm(s.id); }));
    ++compared;
  }
  EXPECT_GT(compared, 20);
}

TEST(GrowCluster, PlaneDiskSeedEqualsEagerUnion) {
  const auto phi = ConnectionFunction::truncated_exponential(0.9, 0.6, 1.0);
  int compared = 0;
  for (std::uint64_t r = 0; r < 40; ++r) {
    const ReplicateStreams st(55, r);
    const PoissonPlane plane(1.0, phi.range(), st.points);
    const Point2 c0{3.3, -1.7};
    const ClusterResult c = grow_cluster(SeedRegion::disk(c0, 2.0), plane, st.edges, phi, StoppingRule{100000, 25.0});
    if (c.status != ClusterStatus::exhausted) continue;
    const std::vector<Site> v = sample_region(plane, Domain::box(BoxSpec(80.0)));
    const Disk d{c0, 2.0};
    ASSERT_EQ(id_set(c), eager_union(v, phi, EdgeMarks(st.edges), [&](const Site& s) { return d.contains(s.pos); }));
    ++compared;
  }
  EXPECT_GT(compared, 10);
}

TEST(GrowCluster, ScratchReuseGivesSameResult) {
  const auto phi = ConnectionFunction::hard_disk();
  PlaneSource scratch;
  for (std::uint64_t r = 0; r < 30; ++r) {
    const ReplicateStreams st(8, r);
    const PoissonPlane plane(1.5, 1.0, st.points);
    const StoppingRule rule{2000, 20.0};
    const ClusterResult a = grow_cluster(SeedRegion::point({0.0, 0.0}), plane, st.edges, phi, rule);
    const ClusterResult b = grow_cluster(SeedRegion::point({0.0, 0.0}), plane, st.edges, phi, rule, {}, scratch);
    EXPECT_EQ(a.ids, b.ids);
    EXPECT_EQ(a.status, b.status);
  }
}

TEST(GrowCluster, EachPairRevealedAtMostOnce) {
  const auto phi = ConnectionFunction::linear_ramp();
  for (std::uint64_t r = 0; r < 20; ++r) {
    const ReplicateStreams st(31, r);
    std::set<std::pair<VertexId, VertexId>> seen;
    std::uint64_t calls = 0;
    bool repeated = false;
    const RevealTrace trace = [&](VertexId a, VertexId b, double d, bool) {
      ++calls;
      EXPECT_LE(d, phi.range());
      repeated |= !seen.insert(std::minmax(a, b)).second;
    };
    GrowthOptions opt;
    opt.trace = &trace;
    const ClusterResult c = grow_cluster(SeedRegion::point({0.0, 0.0}), PoissonPlane(3.0, 1.0, st.points), st.edges,
                                         phi, StoppingRule{3000, 25.0}, opt);
    EXPECT_FALSE(repeated) << "replicate " << r;
    EXPECT_EQ(calls, c.pairs_revealed);
  }
}

TEST(GrowCluster, StatusInvariants) {
  const auto phi = ConnectionFunction::hard_disk();
  for (std::uint64_t r = 0; r < 60; ++r) {
    const ReplicateStreams st(71, r);
    const StoppingRule rule{500, 12.0};
    const ClusterResult c =
        grow_cluster(SeedRegion::point({0.0, 0.0}), PoissonPlane(1.8, 1.0, st.points), st.edges, phi, rule);
    EXPECT_EQ(c.size, c.vertices.size());
    double max_norm = 0.0;
    for (Point2 p : c.vertices) max_norm = std::max(max_norm, norm(p));
    if (c.status == ClusterStatus::escaped) EXPECT_GE(max_norm, rule.escape_radius);
    if (c.status == ClusterStatus::size_capped) EXPECT_EQ(c.size, rule.max_size);
    if (c.status == ClusterStatus::exhausted) {
      EXPECT_LE(c.size, rule.max_size);
      EXPECT_LT(max_norm, rule.escape_radius);
    }
  }
}

TEST(GrowCluster, NestedRulesMonotone) {
  const auto phi = ConnectionFunction::hard_disk();
  const std::vector<StoppingRule> rules{{50, 5.0}, {200, 5.0}, {50, 15.0}, {400, 15.0}, {2000, 30.0}};
  for (std::uint64_t r = 0; r < 80; ++r) {
    const ReplicateStreams st(19, r);
    const PoissonPlane plane(1.7, 1.0, st.points);
    std::vector<ClusterResult> out;
    for (const auto& rule : rules) out.push_back(grow_cluster(SeedRegion::point({0.0, 0.0}), plane, st.edges, phi, rule));
    for (std::size_t i = 0; i < rules.size(); ++i) {
      for (std::size_t j = 0; j < rules.size(); ++j) {
        const bool nested = rules[i].max_size <= rules[j].max_size && rules[i].escape_radius <= rules[j].escape_radius;
        if (!nested) continue;
        if (out[i].status != ClusterStatus::exhausted) EXPECT_GE(out[j].size, out[i].size);
        if (out[i].status == ClusterStatus::exhausted) EXPECT_EQ(out[j].ids, out[i].ids);
      }
    }
  }
}

TEST(GrowCluster, EscapeFrequencyNonincreasingInRadius) {
  const auto phi = ConnectionFunction::hard_disk();
  const std::vector<double> radii{15.0, 30.0, 60.0};
  std::vector<int> escaped(radii.size(), 0);
  PlaneSource scratch;
  for (std::uint64_t r = 0; r < 300; ++r) {
    const ReplicateStreams st(404, r);
    const PoissonPlane plane(2.0, 1.0, st.points);
    std::vector<bool> esc;
    for (double R : radii) {
      esc.push_back(grow_cluster(SeedRegion::point({0.0, 0.0}), plane, st.edges, phi, StoppingRule{10000, R}, {}, scratch)
                        .status == ClusterStatus::escaped);
    }
    for (std::size_t i = 0; i < radii.size(); ++i) escaped[i] += esc[i];
    for (std::size_t i = 1; i < radii.size(); ++i) EXPECT_LE(esc[i], esc[i - 1]);
  }
  EXPECT_GE(escaped[0], escaped[1]);
  EXPECT_GE(escaped[1], escaped[2]);
  EXPECT_GT(escaped[0], 0);
}

TEST(GrowFromRegion, EmptyDiskGivesEmptyCluster) {
  PointSet p = sample_points(0.0, BoxSpec(20.0), 1, 0);
  p.sites.push_back({{5.0, 5.0}, 3, 0.0});
  const ClusterResult c = grow_from_region(1.0, p, ConnectionFunction::hard_disk(), StoppingRule::unlimited());
  EXPECT_EQ(c.size, 0u);
  EXPECT_EQ(c.status, ClusterStatus::exhausted);
}

TEST(GrowFromRegion, EqualsEagerUnionOfComponentsMeetingDisk) {
  const auto phi = ConnectionFunction::hard_disk();
  for (std::uint64_t r = 0; r < 10; ++r) {
    const PointSet p = sample_points(2.0, BoxSpec(64.0), 88, r);
    const ClusterResult c = grow_from_region(1.0, p, phi, StoppingRule::unlimited());
    const Disk d{{0.0, 0.0}, 1.0};
    ASSERT_EQ(id_set(c), eager_union(p.sites, phi, EdgeMarks(p.streams().edges),
                                     [&](const Site& s) { return d.contains(s.pos); }));
  }
}

TEST(GrowFromRegion, SubcriticalRarelyEscapes) {
  const auto phi = ConnectionFunction::hard_disk();
  int escaped = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    const PointSet p = sample_points(0.3, BoxSpec(64.0), 6, r);
    escaped += grow_from_region(1.0, p, phi, StoppingRule{1000000, 30.0}).status == ClusterStatus::escaped;
  }
  EXPECT_LT(escaped / double(reps), 0.05);
}

TEST(GrowFromRegion, RejectsLargeK) {
  const PointSet p = sample_points(1.0, BoxSpec(8.0), 1, 0);
  EXPECT_THROW(grow_from_region(4.0, p, ConnectionFunction::hard_disk(), StoppingRule{}), std::invalid_argument);
  EXPECT_THROW(grow_from_region(0.0, p, ConnectionFunction::hard_disk(), StoppingRule{}), std::invalid_argument);
}

TEST(StoppingRuleTest, Validation) {
  EXPECT_THROW((StoppingRule{0, 10.0}).validate(), std::invalid_argument);
  EXPECT_THROW((StoppingRule{10, 0.0}).validate(), std::invalid_argument);
  EXPECT_NO_THROW(StoppingRule{}.validate());
}

TEST(GrowCluster, MemoryBoundRejectsHugeCap) {
  GrowthOptions opt;
  opt.memory_limit_bytes = 1 << 16;
  const StoppingRule rule{100000000, 1e6};
  EXPECT_THROW(grow_cluster(SeedRegion::point({0.0, 0.0}), PoissonPlane(2.0, 1.0, 1), 2,
                            ConnectionFunction::hard_disk(), rule, opt),
               ResourceError);
  EXPECT_THROW(grow_cluster(SeedRegion::point({0.0, 0.0}), PoissonPlane(2.0, 1.0, 1), 2,
                            ConnectionFunction::hard_disk(), StoppingRule::unlimited()),
               ResourceError);
}

}  // namespace
}  // namespace rcmlab
