#include "rcmlab/estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rcmlab/parallel.hpp"

namespace rcmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("intensity lambda must be finite and >= 0");
  }
}

void check_replicates(std::uint64_t replicates, std::uint64_t minimum) {
  if (replicates < minimum) {
    throw std::invalid_argument("replicates must be >= " + std::to_string(minimum));
  }
}

/// Rough footprint of one boxed replicate: sites, cell list, union-find and edges.
void check_box_memory(const ConnectionFunction& phi, double lambda, double s, std::size_t limit) {
  const double n = lambda * s * s;
  const double vertices = n + 6.0 * std::sqrt(n) + 16.0;
  const double per_vertex = 2.0 * sizeof(Site) + 16.0 + 8.0 * lambda * phi.integral();
  if (vertices * per_vertex > static_cast<double>(limit)) {
    throw ResourceError("a box of side " + std::to_string(s) + " at intensity " + std::to_string(lambda) +
                        " exceeds the configured memory bound");
  }
}

/// Vertex count of every component that meets `pred`, summed.
template <class Pred>
std::uint64_t mass_of_components_meeting(std::span<const Site> sites, const ComponentSummary& c,
                                         Pred&& pred) {
  std::vector<std::uint64_t> size(c.num_components, 0);
  std::vector<char> hit(c.num_components, 0);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    ++size[c.labels[i]];
    if (pred(sites[i].pos)) hit[c.labels[i]] = 1;
  }
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < size.size(); ++l) {
    if (hit[l]) total += size[l];
  }
  return total;
}

/// Order of the cluster of `slot`, explored up to `cap` vertices, or whether
/// it reaches `target` when one is given.
ExploreResult explore_from(StaticSource& src, std::uint32_t slot, const ConnectionFunction& phi,
                           const EdgeMarks& marks, std::uint64_t cap, std::optional<Disk> target,
                           std::vector<std::uint32_t>& cluster) {
  src.new_epoch();
  const std::uint32_t seeds[1] = {slot};
  ExploreLimits limits{cap, kInf, src.site(slot).pos, target};
  return explore(src, seeds, phi, marks, limits, cluster);
}

/// Nested Newman-Ziff sweep: sites join in order of arrival, and `done`
/// is queried after each join. Returns the arrival (scaled to an intensity) of
/// the first site after which `done` holds.
template <class Init, class Done>
double sweep_threshold(std::span<const Site> sites, double unit, const ConnectionFunction& phi,
                       const EdgeMarks& marks, Init&& init_flags, Done&& done) {
  const std::size_t n = sites.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return sites[a].arrival < sites[b].arrival;
  });
  const CellList cells(sites, phi.range());
  UnionFind uf(n);
  std::vector<std::uint8_t> flags(n, 0);
  std::vector<char> present(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) flags[i] = init_flags(sites[i]);
  const double unit2 = unit * unit;
  for (std::uint32_t i : order) {
    present[i] = 1;
    const Point2 p = sites[i].pos;
    cells.for_each_near(p, phi.range(), [&](std::uint32_t j) {
      if (j == i || !present[j]) return;
      if (!marks.present(sites[i].id, sites[j].id, distance(p, sites[j].pos), phi)) return;
      const std::uint32_t a = uf.find(i);
      const std::uint32_t b = uf.find(j);
      if (a == b) return;
      const std::uint8_t merged = flags[a] | flags[b];
      uf.unite(a, b);
      flags[uf.find(a)] = merged;
    });
    if (done(uf, flags, i)) return sites[i].arrival / unit2;
  }
  return kInf;
}

std::uint64_t bits_of(double x) noexcept { return std::bit_cast<std::uint64_t>(x); }

}  // namespace

// --- theta ------------------------------------------------------------------

ThetaEstimate estimate_theta(const ConnectionFunction& phi, double lambda, const StoppingRule& rule,
                             std::uint64_t replicates, std::uint64_t seed,
                             const ThetaOptions& options) {
  check_lambda(lambda);
  check_replicates(replicates, 100);
  rule.validate();

  const std::uint64_t family = stream_seed(seed, tags::theta);
  const unsigned workers = effective_workers(options.run.workers);
  std::vector<PlaneSource> scratch(workers);
  GrowthOptions growth;
  growth.memory_limit_bytes = options.run.memory_limit_bytes;

  ThetaEstimate est;
  est.rule = rule;
  est.lambda = lambda;
  est.k_report = options.k_report;
  est.outcomes = parallel_map<ClusterOutcome>(replicates, workers, [&](std::size_t r, unsigned w) {
    const ReplicateStreams st(family, r);
    const PoissonPlane plane(lambda, phi.range(), st.points);
    const ClusterResult c = grow_cluster(SeedRegion::point({0.0, 0.0}), plane, st.edges, phi, rule,
                                         growth, scratch[w]);
    return ClusterOutcome{r, st.root, c.status, c.size};
  });

  std::uint64_t escaped = 0;
  std::uint64_t capped = 0;
  std::uint64_t beyond = 0;
  std::map<std::uint64_t, std::uint64_t> counts;
  for (const ClusterOutcome& o : est.outcomes) {
    switch (o.status) {
      case ClusterStatus::escaped:
        ++escaped;
        break;
      case ClusterStatus::size_capped:
        ++capped;
        break;
      case ClusterStatus::exhausted:
        if (o.size <= options.k_report) {
          ++counts[o.size];
        } else {
          ++beyond;
        }
        break;
    }
  }
  const double n = static_cast<double>(replicates);
  for (const auto& [k, c] : counts) est.pi_hat[k] = static_cast<double>(c) / n;
  est.residual = static_cast<double>(beyond) / n;
  est.escaped_fraction = static_cast<double>(escaped) / n;
  est.capped_fraction = static_cast<double>(capped) / n;
  est.theta_hat = frequency_estimate(escaped + capped, replicates, seed);
  return est;
}

// --- lambda_c ---------------------------------------------------------------

std::string LambdaCCriterion::describe() const {
  std::ostringstream os;
  if (kind == Kind::spanning) {
    os << "left-right spanning probability crosses " << level;
  } else {
    os << "P[origin cluster reaches s/2] crosses tau = " << tau;
  }
  os << " (" << replicates << " replicates per size, bisection width " << width
     << " range^-2, at most " << max_iterations << " halvings)";
  return os.str();
}

void LambdaCCriterion::validate() const {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("criterion level must be in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("criterion tau must be in (0, 1)");
  if (replicates < 2) throw std::invalid_argument("criterion replicates must be >= 2");
  if (!(width > 0.0)) throw std::invalid_argument("bisection width must be positive");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
}

EstimateWithCI threshold_frequency(std::span<const double> thresholds, double lambda,
                                   std::uint64_t seed) {
  const auto hits = static_cast<std::uint64_t>(
      std::count_if(thresholds.begin(), thresholds.end(), [&](double t) { return t < lambda; }));
  return frequency_estimate(hits, thresholds.size(), seed);
}

double spanning_threshold(const PointSet& pts, const ConnectionFunction& phi) {
  constexpr std::uint8_t kLeft = 1;
  constexpr std::uint8_t kRight = 2;
  const double edge = pts.box.half() - phi.range();
  return sweep_threshold(
      pts.sites, pts.unit, phi, EdgeMarks(pts.streams().edges),
      [&](const Site& s) -> std::uint8_t {
        return static_cast<std::uint8_t>((s.pos.x <= -edge ? kLeft : 0) | (s.pos.x >= edge ? kRight : 0));
      },
      [&](UnionFind& uf, const std::vector<std::uint8_t>& flags, std::uint32_t i) {
        return flags[uf.find(i)] == (kLeft | kRight);
      });
}

double escape_threshold(const PoissonPlane& plane, std::uint64_t edge_key,
                        const ConnectionFunction& phi, double radius) {
  std::vector<Site> sites = sample_region(plane, Domain::disk({{0.0, 0.0}, radius + phi.range()}));
  const auto origin = static_cast<std::uint32_t>(sites.size());
  sites.push_back(palm_site(0, {0.0, 0.0}));
  const double r2 = radius * radius;
  return sweep_threshold(
      sites, plane.unit(), phi, EdgeMarks(edge_key),
      [&](const Site& s) -> std::uint8_t { return norm2(s.pos) >= r2 ? 1 : 0; },
      [&](UnionFind& uf, const std::vector<std::uint8_t>& flags, std::uint32_t) {
        return flags[uf.find(origin)] != 0;
      });
}

LambdaCBracket estimate_lambda_c(const ConnectionFunction& phi, std::span<const double> s_grid,
                                 const LambdaCCriterion& criterion, std::uint64_t seed,
                                 const RunOptions& run) {
  criterion.validate();
  if (s_grid.size() < 2) throw std::invalid_argument("lambda_c needs at least two box sizes");
  for (double s : s_grid) (void)BoxSpec(s);

  const double unit = phi.range();
  const double unit2 = unit * unit;
  const double max_lambda = 255.0 / unit2;
  const double target = criterion.kind == LambdaCCriterion::Kind::spanning ? criterion.level
                                                                           : criterion.tau;
  const double width = criterion.width / unit2;
  const std::uint64_t family = stream_seed(seed, tags::lambda_c);

  auto thresholds_at = [&](double s, double lambda_max) {
    const std::uint64_t base = derive_key(family, bits_of(s / unit));
    return parallel_map<double>(criterion.replicates, run.workers, [&](std::size_t r, unsigned) {
      if (criterion.kind == LambdaCCriterion::Kind::spanning) {
        check_box_memory(phi, lambda_max, s, run.memory_limit_bytes);
        return spanning_threshold(sample_points(lambda_max, BoxSpec(s), base, r, unit), phi);
      }
      const ReplicateStreams st(base, r);
      return escape_threshold(PoissonPlane(lambda_max, unit, st.points), st.edges, phi, 0.5 * s);
    });
  };

  // Common starting bracket [0, hi] for all sizes: mean degree 10, doubled
  // until every size crosses.
  double hi0 = std::min(10.0 / phi.integral(), max_lambda);
  std::vector<std::vector<double>> thresholds(s_grid.size());
  for (;;) {
    bool crossed = true;
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      thresholds[k] = thresholds_at(s_grid[k], hi0);
      crossed = crossed && threshold_frequency(thresholds[k], hi0).value >= target;
    }
    if (crossed) break;
    if (hi0 >= max_lambda) throw std::runtime_error("lambda_c: criterion never crosses below the maximal intensity");
    hi0 = std::min(2.0 * hi0, max_lambda);
  }

  LambdaCBracket out;
  out.criterion = criterion.describe();
  for (std::size_t k = 0; k < s_grid.size(); ++k) {
    CrossingStats cs;
    cs.s = s_grid[k];
    cs.thresholds = thresholds[k];
    double lo = 0.0;
    double hi = hi0;
    while (hi - lo > width && cs.iterations < criterion.max_iterations) {
      const double mid = 0.5 * (lo + hi);
      const EstimateWithCI e = threshold_frequency(cs.thresholds, mid, seed);
      cs.evaluations.emplace_back(mid, e);
      (e.value >= target ? hi : lo) = mid;
      ++cs.iterations;
    }
    cs.lower = lo;
    cs.upper = hi;
    auto sorted = cs.evaluations;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      const EstimateWithCI& a = sorted[i - 1].second;
      const EstimateWithCI& b = sorted[i].second;
      if (a.value > b.value + 3.0 * combined_sigma(a, b)) cs.monotone = false;
    }
    out.monotone = out.monotone && cs.monotone;
    out.per_s.push_back(std::move(cs));
  }

  double max_lower = 0.0;
  double min_upper = kInf;
  out.lower = kInf;
  out.upper = 0.0;
  for (const CrossingStats& cs : out.per_s) {
    out.lower = std::min(out.lower, cs.lower);
    out.upper = std::max(out.upper, cs.upper);
    max_lower = std::max(max_lower, cs.lower);
    min_upper = std::min(min_upper, cs.upper);
  }
  out.agree = max_lower - min_upper <= width;
  return out;
}

// --- Mecke ------------------------------------------------------------------

MeckeReport mecke_check_Ns(const ConnectionFunction& phi, double lambda, double K, double s,
                           std::uint64_t replicates, std::uint64_t seed, const RunOptions& run) {
  check_lambda(lambda);
  check_replicates(replicates, 2);
  const BoxSpec box(s);
  if (!(K > 0.0) || !(K < box.half())) throw std::invalid_argument("Mecke check needs 0 < K < s/2");
  check_box_memory(phi, lambda, s, run.memory_limit_bytes);
  const double unit = phi.range();
  const Disk dk{{0.0, 0.0}, K};

  const std::uint64_t lhs_family = stream_seed(seed, tags::mecke_lhs);
  const auto n_s = parallel_map<double>(replicates, run.workers, [&](std::size_t r, unsigned) {
    const PointSet pts = sample_points(lambda, box, lhs_family, r, unit);
    const ComponentSummary c = components_of(pts.sites, phi, EdgeMarks(pts.streams().edges), true);
    return static_cast<double>(
        mass_of_components_meeting(pts.sites, c, [&](Point2 p) { return dk.contains(p); }));
  });

  const std::uint64_t rhs_family = stream_seed(seed, tags::mecke_rhs);
  const auto hits = parallel_map<char>(replicates, run.workers, [&](std::size_t r, unsigned) {
    const PalmPointSet pp = with_uniform_points(sample_points(lambda, box, rhs_family, r, unit), 1);
    StaticSource src(pp.vertices(), unit);
    std::vector<std::uint32_t> cluster;
    const auto v = static_cast<std::uint32_t>(pp.base.size());
    const ExploreResult e = explore_from(src, v, phi, EdgeMarks(pp.base.streams().edges),
                                         std::numeric_limits<std::uint64_t>::max(), dk, cluster);
    return static_cast<char>(e.status == ExploreStatus::target_reached);
  });

  MeckeReport rep;
  rep.lhs = mean_estimate(n_s, seed);
  rep.rhs = scale(frequency_estimate(static_cast<std::uint64_t>(std::count(hits.begin(), hits.end(), 1)),
                                     replicates, seed),
                  lambda * box.area());
  rep.sigma = combined_sigma(rep.lhs, rep.rhs);
  rep.compatible = std::abs(rep.lhs.value - rep.rhs.value) <= 3.0 * rep.sigma;
  return rep;
}

MeckeSecondReport mecke_check_second(const ConnectionFunction& phi, double lambda, double s,
                                     std::uint64_t replicates, std::uint64_t seed,
                                     const RunOptions& run, double allowance) {
  check_lambda(lambda);
  check_replicates(replicates, 2);
  const BoxSpec box(s);
  check_box_memory(phi, lambda, s, run.memory_limit_bytes);
  const double unit = phi.range();
  const auto k0 = static_cast<std::uint64_t>(std::ceil(std::sqrt(s)));

  const std::uint64_t lhs_family = stream_seed(seed, tags::mecke_lhs);
  const auto pairs = parallel_map<double>(replicates, run.workers, [&](std::size_t r, unsigned) {
    const PointSet pts = sample_points(lambda, box, lhs_family, r, unit);
    const ComponentSummary c = components_of(pts.sites, phi, EdgeMarks(pts.streams().edges));
    double n = 0.0;
    for (std::uint64_t size : c.component_sizes) {
      if (size < k0) break;
      n += static_cast<double>(size);
    }
    return n * (n - 1.0);
  });

  // Palm clusters of order >= k0 among `count` uniform points.
  auto large_palm = [&](std::uint64_t family, int count) {
    return parallel_map<char>(replicates, run.workers, [&](std::size_t r, unsigned) {
      const PalmPointSet pp = with_uniform_points(sample_points(lambda, box, family, r, unit), count);
      StaticSource src(pp.vertices(), unit);
      const EdgeMarks marks(pp.base.streams().edges);
      std::vector<std::uint32_t> cluster;
      for (int k = 0; k < count; ++k) {
        const auto v = static_cast<std::uint32_t>(pp.base.size() + static_cast<std::size_t>(k));
        if (explore_from(src, v, phi, marks, k0, std::nullopt, cluster).status !=
            ExploreStatus::size_capped) {
          return char{0};
        }
      }
      return char{1};
    });
  };
  auto count_ones = [](const std::vector<char>& v) {
    return static_cast<std::uint64_t>(std::count(v.begin(), v.end(), 1));
  };

  MeckeSecondReport rep;
  const double norm = lambda * lambda * box.area() * box.area();
  rep.lhs = mean_estimate(pairs, seed);
  rep.both_fraction = frequency_estimate(count_ones(large_palm(stream_seed(seed, tags::mecke_rhs), 2)),
                                         replicates, seed);
  rep.rhs = scale(rep.both_fraction, norm);
  rep.sigma = combined_sigma(rep.lhs, rep.rhs);
  rep.compatible = std::abs(rep.lhs.value - rep.rhs.value) <= 3.0 * rep.sigma;

  rep.theta_s = frequency_estimate(count_ones(large_palm(stream_seed(seed, tags::mecke_theta), 1)),
                                   replicates, seed);
  rep.theta_s_squared = rep.theta_s.value * rep.theta_s.value;
  rep.factorization_sigma = std::hypot(rep.both_fraction.sigma(), 2.0 * rep.theta_s.value * rep.theta_s.sigma());
  rep.allowance = allowance;
  rep.factorization_ok = std::abs(rep.both_fraction.value - rep.theta_s_squared) <=
                         3.0 * rep.factorization_sigma + allowance;
  return rep;
}

// --- giant component ----------------------------------------------------------

std::uint64_t giant_stream(std::uint64_t seed, double s) noexcept {
  return derive_key(stream_seed(seed, tags::giant), bits_of(s));
}

GiantStatistics giant_statistics(const ConnectionFunction& phi, double lambda, double s,
                                 std::uint64_t replicates, std::uint64_t seed, const RunOptions& run) {
  check_lambda(lambda);
  check_replicates(replicates, 1);
  const BoxSpec box(s);
  check_box_memory(phi, lambda, s, run.memory_limit_bytes);
  const std::uint64_t family = giant_stream(seed, s);

  GiantStatistics g;
  g.lambda = lambda;
  g.s = s;
  g.rows = parallel_map<GiantRow>(replicates, run.workers, [&](std::size_t r, unsigned) {
    const PointSet pts = sample_points(lambda, box, family, r, phi.range());
    const auto [l1, l2] = giant_fraction(pts, phi);
    return GiantRow{r, pts.streams().root, l1, l2};
  });
  std::vector<double> l1;
  std::vector<double> l2;
  for (const GiantRow& row : g.rows) {
    l1.push_back(row.L1_frac);
    l2.push_back(row.L2_frac);
  }
  g.L1 = mean_estimate(l1, seed);
  g.L2 = mean_estimate(l2, seed);
  g.median_L1 = median(l1);
  g.median_L2 = median(l2);
  return g;
}

// --- positive association -----------------------------------------------------

IncreasingEvent event_L1_at_least(double count) {
  std::ostringstream name;
  name << "L1>=" << count;
  return {name.str(), [count](const GraphObservation& g) {
            return static_cast<double>(g.components.L1) >= count;
          }};
}

IncreasingEvent event_disk_to_boundary(double K) {
  std::ostringstream name;
  name << "D_" << K << "<->boundary";
  return {name.str(), [K](const GraphObservation& g) {
            const Disk dk{{0.0, 0.0}, K};
            const double inner = g.points.box.half() - g.phi.range();
            std::vector<char> meets(g.components.num_components, 0);
            for (std::size_t i = 0; i < g.points.size(); ++i) {
              if (dk.contains(g.points.sites[i].pos)) meets[g.components.labels[i]] = 1;
            }
            for (std::size_t i = 0; i < g.points.size(); ++i) {
              const Point2 p = g.points.sites[i].pos;
              if (std::max(std::abs(p.x), std::abs(p.y)) >= inner && meets[g.components.labels[i]]) {
                return true;
              }
            }
            return false;
          }};
}

IncreasingEvent event_nonempty() {
  return {"L1>=1", [](const GraphObservation& g) { return g.components.L1 >= 1; }};
}

FkgReport fkg_sanity(const ConnectionFunction& phi, double lambda, double s,
                     std::span<const std::pair<IncreasingEvent, IncreasingEvent>> events,
                     std::uint64_t replicates, std::uint64_t seed, const RunOptions& run) {
  check_lambda(lambda);
  check_replicates(replicates, 2);
  const BoxSpec box(s);
  check_box_memory(phi, lambda, s, run.memory_limit_bytes);
  const std::uint64_t family = stream_seed(seed, tags::fkg);
  const std::size_t m = events.size();

  // Row r holds (first, second) indicators for every pair.
  const auto rows = parallel_map<std::vector<char>>(replicates, run.workers, [&](std::size_t r, unsigned) {
    const PointSet pts = sample_points(lambda, box, family, r, phi.range());
    const ComponentSummary c = components_of(pts.sites, phi, EdgeMarks(pts.streams().edges), true);
    const GraphObservation obs{pts, c, phi};
    std::vector<char> out(2 * m);
    for (std::size_t k = 0; k < m; ++k) {
      out[2 * k] = events[k].first.test(obs);
      out[2 * k + 1] = events[k].second.test(obs);
    }
    return out;
  });

  FkgReport rep;
  rep.replicates = replicates;
  rep.ok = true;
  const double n = static_cast<double>(replicates);
  for (std::size_t k = 0; k < m; ++k) {
    CovarianceReport cr;
    cr.first = events[k].first.name;
    cr.second = events[k].second.name;
    for (const auto& row : rows) {
      cr.p_first += row[2 * k];
      cr.p_second += row[2 * k + 1];
    }
    cr.p_first /= n;
    cr.p_second /= n;
    std::vector<double> z;
    z.reserve(rows.size());
    for (const auto& row : rows) z.push_back((row[2 * k] - cr.p_first) * (row[2 * k + 1] - cr.p_second));
    const EstimateWithCI e = mean_estimate(z);
    cr.covariance = e.value * n / (n - 1.0);
    cr.sigma = e.sigma() * n / (n - 1.0);
    cr.ok = cr.covariance >= -3.0 * cr.sigma - 1e-12;
    rep.ok = rep.ok && cr.ok;
    rep.pairs.push_back(std::move(cr));
  }
  return rep;
}

}  // namespace rcmlab
