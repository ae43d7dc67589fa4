#include "rcmlab/events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "rcmlab/parallel.hpp"

namespace rcmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kNoCap = std::numeric_limits<std::uint64_t>::max();

void check_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("intensity lambda must be finite and >= 0");
  }
}

template <class Eval>
EstimateWithCI event_frequency(const ConnectionFunction& phi, double lambda, double radius,
                               std::string_view tag, std::uint64_t replicates, std::uint64_t seed,
                               const RunOptions& run, Eval&& eval) {
  if (replicates < 2) throw std::invalid_argument("replicates must be >= 2");
  const std::uint64_t family = stream_seed(seed, tag);
  const auto hits = parallel_map<char>(replicates, run.workers, [&](std::size_t r, unsigned) {
    const ReplicateStreams st(family, r);
    const PoissonPlane plane(lambda, phi.range(), st.points);
    StaticSource src(sample_region(plane, Domain::disk({{0.0, 0.0}, radius})), phi.range());
    return static_cast<char>(eval(src, EdgeMarks(st.edges)));
  });
  return frequency_estimate(static_cast<std::uint64_t>(std::count(hits.begin(), hits.end(), 1)),
                            replicates, seed);
}

}  // namespace

void EventSpecU::validate() const {
  check_lambda(lambda);
  if (!(K > 0.0) || !(L > K) || !std::isfinite(L)) throw std::invalid_argument("event U needs L > K > 0");
}

void EventSpecF::validate() const {
  check_lambda(lambda);
  if (!(K > 0.0) || !(M > 2.0 * K) || !std::isfinite(M)) {
    throw std::invalid_argument("event F needs M > 2K > 0");
  }
}

void BlockParams::validate() const {
  check_lambda(lambda);
  if (!(K > 0.0) || !std::isfinite(M)) throw std::invalid_argument("block field needs K > 0");
  if (!(M > 3.0 * K)) throw std::invalid_argument("block field needs M > 3K (so that M/3 > K)");
}

bool event_U(StaticSource& src, Point2 center, double K, double L, const ConnectionFunction& phi,
             const EdgeMarks& marks) {
  src.set_domain(Domain::disk({center, L + phi.range()}));
  src.new_epoch();
  const std::vector<std::uint32_t> seeds = src.slots_in(Disk{center, K});
  const double L2 = L * L;
  const ExploreLimits limits{kNoCap, kInf, center, std::nullopt};
  std::vector<std::uint32_t> cluster;
  int crossing = 0;
  for (std::uint32_t s : seeds) {
    if (src.visited(s)) continue;
    const std::uint32_t one[1] = {s};
    explore(src, one, phi, marks, limits, cluster);
    const bool leaves = std::any_of(cluster.begin(), cluster.end(), [&](std::uint32_t v) {
      return distance2(src.site(v).pos, center) > L2;
    });
    if (leaves && ++crossing > 1) return false;
  }
  return crossing == 1;
}

bool event_F(StaticSource& src, Point2 from, Point2 to, double K, double M,
             const ConnectionFunction& phi, const EdgeMarks& marks) {
  src.set_domain(Domain::disk({from, 3.0 * M}));
  src.new_epoch();
  const std::vector<std::uint32_t> seeds = src.slots_in(Disk{from, K});
  const ExploreLimits limits{kNoCap, kInf, from, Disk{to, K}};
  std::vector<std::uint32_t> cluster;
  return explore(src, seeds, phi, marks, limits, cluster).status == ExploreStatus::target_reached;
}

EstimateWithCI estimate_event_U(const ConnectionFunction& phi, const EventSpecU& spec,
                                std::uint64_t replicates, std::uint64_t seed, const RunOptions& run) {
  spec.validate();
  return event_frequency(phi, spec.lambda, spec.L + phi.range(), tags::event_u, replicates, seed, run,
                         [&](StaticSource& src, const EdgeMarks& marks) {
                           return event_U(src, {0.0, 0.0}, spec.K, spec.L, phi, marks);
                         });
}

EstimateWithCI estimate_event_F(const ConnectionFunction& phi, const EventSpecF& spec,
                                std::uint64_t replicates, std::uint64_t seed, const RunOptions& run) {
  spec.validate();
  return event_frequency(phi, spec.lambda, 3.0 * spec.M, tags::event_f, replicates, seed, run,
                         [&](StaticSource& src, const EdgeMarks& marks) {
                           return event_F(src, {0.0, 0.0}, {spec.M, 0.0}, spec.K, spec.M, phi, marks);
                         });
}

std::vector<std::pair<double, EstimateWithCI>> grid_search_U(
    const ConnectionFunction& phi, double K, double lambda, std::span<const double> L_grid,
    std::uint64_t replicates, std::uint64_t seed, const RunOptions& run) {
  std::vector<std::pair<double, EstimateWithCI>> out;
  for (double L : L_grid) out.emplace_back(L, estimate_event_U(phi, {K, L, lambda}, replicates, seed, run));
  return out;
}

std::vector<std::pair<double, EstimateWithCI>> grid_search_F(
    const ConnectionFunction& phi, double K, double lambda, std::span<const double> M_grid,
    std::uint64_t replicates, std::uint64_t seed, const RunOptions& run) {
  std::vector<std::pair<double, EstimateWithCI>> out;
  for (double M : M_grid) out.emplace_back(M, estimate_event_F(phi, {K, M, lambda}, replicates, seed, run));
  return out;
}

// --- block field --------------------------------------------------------------

double BlockFieldSample::fraction() const noexcept {
  if (values.empty()) return 0.0;
  return static_cast<double>(std::count(values.begin(), values.end(), 1)) /
         static_cast<double>(values.size());
}

std::uint8_t block_value(StaticSource& src, Point2 center, const BlockParams& p,
                         const ConnectionFunction& phi, const EdgeMarks& marks) {
  if (!event_U(src, center, p.K, p.M / 3.0, phi, marks)) return 0;
  const Point2 nbrs[4] = {{center.x + p.M, center.y},
                          {center.x - p.M, center.y},
                          {center.x, center.y + p.M},
                          {center.x, center.y - p.M}};
  for (Point2 y : nbrs) {
    if (!event_F(src, center, y, p.K, p.M, phi, marks)) return 0;
  }
  return 1;
}

std::uint64_t block_field_edge_key(std::uint64_t seed, std::uint64_t sample) noexcept {
  return ReplicateStreams(stream_seed(seed, tags::block_field), sample).edges;
}

std::vector<Site> block_field_sites(const ConnectionFunction& phi, const BlockParams& params, int nx,
                                    int ny, std::uint64_t seed, std::uint64_t sample,
                                    std::size_t memory_limit_bytes) {
  params.validate();
  if (nx < 1 || ny < 1) throw std::invalid_argument("block field grid must be nonempty");
  const double half = 0.5 * params.M * (std::max(nx, ny) - 1) + 3.0 * params.M;
  const double expected = params.lambda * 4.0 * half * half;
  if (expected * 2.0 * sizeof(Site) > static_cast<double>(memory_limit_bytes)) {
    throw ResourceError("block field window exceeds the configured memory bound");
  }
  const ReplicateStreams st(stream_seed(seed, tags::block_field), sample);
  const PoissonPlane plane(params.lambda, phi.range(), st.points);
  const Domain window{Domain::Kind::box, {0.5 * params.M * (nx - 1), 0.5 * params.M * (ny - 1)}, half};
  return sample_region(plane, window);
}

BlockFieldSample block_field_sample(const ConnectionFunction& phi, const BlockParams& params, int nx,
                                    int ny, std::uint64_t seed, std::uint64_t sample,
                                    const RunOptions& run) {
  const StaticSource shared(block_field_sites(phi, params, nx, ny, seed, sample, run.memory_limit_bytes),
                            phi.range());
  const EdgeMarks marks(block_field_edge_key(seed, sample));

  BlockFieldSample out;
  out.params = params;
  out.nx = nx;
  out.ny = ny;
  out.seed = seed;
  out.sample = sample;
  const auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  const unsigned workers = std::min<unsigned>(effective_workers(run.workers), static_cast<unsigned>(n));
  std::vector<StaticSource> local(workers, shared);
  out.values = parallel_map<std::uint8_t>(n, workers, [&](std::size_t i, unsigned w) {
    const Point2 c = out.center(static_cast<int>(i % nx), static_cast<int>(i / nx));
    return block_value(local[w], c, params, phi, marks);
  });
  return out;
}

DependenceReport dependence_check(std::span<const BlockFieldSample> samples, int d) {
  if (samples.empty()) throw std::invalid_argument("dependence_check needs at least one sample");
  const BlockFieldSample& first = samples.front();
  for (const BlockFieldSample& s : samples) {
    if (s.nx != first.nx || s.ny != first.ny || s.params.M != first.params.M) {
      throw std::invalid_argument("dependence_check: samples must share grid and M");
    }
  }
  const int nx = first.nx;
  const int ny = first.ny;
  const int n = nx * ny;
  auto linf = [&](int a, int b) { return std::max(std::abs(a % nx - b % nx), std::abs(a / nx - b / nx)); };

  DependenceReport rep;
  rep.distance = d;
  rep.samples = samples.size();
  double ones = 0.0;
  for (const BlockFieldSample& s : samples) ones += static_cast<double>(std::count(s.values.begin(), s.values.end(), 1));
  rep.p_hat = ones / (static_cast<double>(n) * static_cast<double>(samples.size()));
  const double var = rep.p_hat * (1.0 - rep.p_hat);

  rep.min_center_distance = kInf;
  std::vector<double> per_sample;
  std::vector<double> products;
  double adjacent = 0.0;
  std::uint64_t adjacent_pairs = 0;
  for (const BlockFieldSample& s : samples) {
    double sum = 0.0;
    std::uint64_t pairs = 0;
    for (int a = 0; a < n; ++a) {
      const double xa = s.values[a] - rep.p_hat;
      for (int b = a + 1; b < n; ++b) {
        const int dist = linf(a, b);
        const double prod = xa * (s.values[b] - rep.p_hat);
        if (dist == 1) {
          adjacent += prod;
          ++adjacent_pairs;
        }
        if (dist <= d) continue;
        sum += prod;
        ++pairs;
        if (samples.size() == 1) products.push_back(prod);
        if (&s == &samples.front()) {
          const Point2 ca = s.center(a % nx, a / nx);
          const Point2 cb = s.center(b % nx, b / nx);
          rep.min_center_distance = std::min(rep.min_center_distance, distance(ca, cb));
        }
      }
    }
    rep.pairs_per_sample = pairs;
    per_sample.push_back(pairs > 0 ? sum / static_cast<double>(pairs) : 0.0);
  }
  // Determining regions D_{3M} are disjoint iff centres are more than 6M apart.
  rep.structural_disjoint = rep.pairs_per_sample > 0 && rep.min_center_distance > 6.0 * first.params.M;

  const EstimateWithCI cov = samples.size() >= 2 ? mean_estimate(per_sample) : mean_estimate(products);
  rep.covariance = cov.value;
  rep.sigma = std::isfinite(cov.sigma()) ? cov.sigma() : 0.0;
  rep.correlation = var > 0.0 ? rep.covariance / var : 0.0;
  rep.adjacent_correlation =
      (var > 0.0 && adjacent_pairs > 0) ? adjacent / static_cast<double>(adjacent_pairs) / var : 0.0;
  rep.within_3_sigma = std::abs(rep.covariance) <= 3.0 * rep.sigma + 1e-12;
  return rep;
}

HomogeneityReport homogeneity_check(std::span<const BlockFieldSample> samples) {
  HomogeneityReport rep;
  if (samples.empty()) return rep;
  const std::size_t n = samples.front().values.size();
  std::vector<double> ones(n, 0.0);
  for (const BlockFieldSample& s : samples) {
    if (s.values.size() != n) throw std::invalid_argument("homogeneity_check: grids differ");
    for (std::size_t i = 0; i < n; ++i) ones[i] += s.values[i];
  }
  const double J = static_cast<double>(samples.size());
  double total = 0.0;
  for (double o : ones) total += o;
  const double p = total / (J * static_cast<double>(n));
  rep.dof = static_cast<double>(n) - 1.0;
  if (p <= 0.0 || p >= 1.0 || n < 2) return rep;
  const double e1 = J * p;
  const double e0 = J * (1.0 - p);
  for (double o : ones) {
    rep.chi_square += (o - e1) * (o - e1) / e1 + ((J - o) - e0) * ((J - o) - e0) / e0;
  }
  rep.p_value = chi_square_sf(rep.chi_square, rep.dof);
  rep.ok = rep.p_value >= 0.01;
  return rep;
}

void write_block_field(std::ostream& os, const BlockFieldSample& s) {
  os << "# block field K=" << s.params.K << " M=" << s.params.M << " lambda=" << s.params.lambda
     << " nx=" << s.nx << " ny=" << s.ny << " seed=" << s.seed << " sample=" << s.sample << '\n';
  for (int iy = 0; iy < s.ny; ++iy) {
    for (int ix = 0; ix < s.nx; ++ix) os << static_cast<int>(s.at(ix, iy));
    os << '\n';
  }
}

}  // namespace rcmlab
