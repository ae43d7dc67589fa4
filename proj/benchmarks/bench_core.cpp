#include <benchmark/benchmark.h>

#include "rcmlab/estimators.hpp"
#include "rcmlab/graph.hpp"
#include "rcmlab/growth.hpp"
#include "rcmlab/points.hpp"

namespace {

using namespace rcmlab;

void BM_SamplePoints(benchmark::State& state) {
  const double s = static_cast<double>(state.range(0));
  std::uint64_t r = 0;
  std::size_t n = 0;
  for (auto _ : state) {
    const PointSet p = sample_points(2.0, BoxSpec(s), 1, r++);
    n += p.size();
    benchmark::DoNotOptimize(p.sites.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SamplePoints)->Arg(32)->Arg(128);

void BM_BuildEdges(benchmark::State& state) {
  const PointSet p = sample_points(2.0, BoxSpec(static_cast<double>(state.range(0))), 1, 0);
  const auto phi = ConnectionFunction::hard_disk();
  for (auto _ : state) benchmark::DoNotOptimize(build_edges(p, phi).edges.size());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * p.size()));
}
BENCHMARK(BM_BuildEdges)->Arg(32)->Arg(128);

void BM_GiantReplicate(benchmark::State& state) {
  const auto phi = ConnectionFunction::hard_disk();
  std::uint64_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(giant_fraction(sample_points(2.0, BoxSpec(64.0), 1, r++), phi));
  }
}
BENCHMARK(BM_GiantReplicate);

void BM_GrowCluster(benchmark::State& state) {
  const auto phi = ConnectionFunction::hard_disk();
  const double lambda = static_cast<double>(state.range(0)) / 10.0;
  const StoppingRule rule{10'000, 60.0};
  PlaneSource scratch;
  std::uint64_t r = 0;
  std::uint64_t vertices = 0;
  for (auto _ : state) {
    const ReplicateStreams st(7, r++);
    const ClusterResult c =
        grow_cluster(SeedRegion::point({0.0, 0.0}), PoissonPlane(lambda, 1.0, st.points), st.edges, phi, rule, {}, scratch);
    vertices += c.size;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(vertices));
}
BENCHMARK(BM_GrowCluster)->Arg(10)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
