#include "rcmlab/growth.hpp"

#include <algorithm>
#include <cmath>

namespace rcmlab {

namespace {

constexpr std::size_t kBytesPerClusterVertex = sizeof(Site) + 3 * sizeof(std::uint32_t);
constexpr std::size_t kBytesPerChunk = 3 * sizeof(std::uint32_t);

template <class Source>
ExploreResult explore_impl(Source& src, std::span<const std::uint32_t> seeds,
                           const ConnectionFunction& phi, const EdgeMarks& marks,
                           const ExploreLimits& limits, std::vector<std::uint32_t>& cluster,
                           const RevealTrace* trace) {
  ExploreResult result;
  cluster.clear();
  bool running = true;
  const double escape2 = limits.escape_radius * limits.escape_radius;
  double radius2 = 0.0;

  auto add = [&](std::uint32_t slot) {
    src.visit(slot);
    cluster.push_back(slot);
    const Point2 p = src.site(slot).pos;
    const double d2 = distance2(p, limits.center);
    radius2 = std::max(radius2, d2);
    if (limits.target && limits.target->contains(p)) {
      result.status = ExploreStatus::target_reached;
      running = false;
    } else if (d2 >= escape2) {
      result.status = ExploreStatus::escaped;
      running = false;
    } else if (cluster.size() >= limits.max_size) {
      result.status = ExploreStatus::size_capped;
      running = false;
    }
  };

  for (std::uint32_t s : seeds) {
    if (!running) break;
    if (!src.visited(s)) add(s);
  }

  for (std::size_t head = 0; running && head < cluster.size(); ++head) {
    const std::uint32_t x = cluster[head];
    const VertexId xid = src.site(x).id;
    src.for_each_candidate(x, [&](std::uint32_t y, double d) {
      if (!running || src.visited(y)) return;
      ++result.pairs_revealed;
      const bool edge = marks.present(xid, src.site(y).id, d, phi);
      if (trace) (*trace)(xid, src.site(y).id, d, edge);
      if (edge) add(y);
    });
  }
  result.explored_radius = std::sqrt(radius2);
  return result;
}

ClusterStatus to_cluster_status(ExploreStatus s) noexcept {
  switch (s) {
    case ExploreStatus::size_capped:
      return ClusterStatus::size_capped;
    case ExploreStatus::escaped:
      return ClusterStatus::escaped;
    default:
      return ClusterStatus::exhausted;
  }
}

template <class Source>
ClusterResult collect(const Source& src, const std::vector<std::uint32_t>& cluster,
                      const ExploreResult& r) {
  ClusterResult out;
  out.size = cluster.size();
  out.vertices.reserve(cluster.size());
  out.ids.reserve(cluster.size());
  for (std::uint32_t s : cluster) {
    out.vertices.push_back(src.site(s).pos);
    out.ids.push_back(src.site(s).id);
  }
  out.status = to_cluster_status(r.status);
  out.explored_radius = r.explored_radius;
  out.pairs_revealed = r.pairs_revealed;
  return out;
}

void check_cluster_memory(const StoppingRule& rule, std::size_t available_vertices,
                          std::size_t limit) {
  const double need = static_cast<double>(std::min<std::uint64_t>(rule.max_size, available_vertices)) *
                      kBytesPerClusterVertex;
  if (need > static_cast<double>(limit)) {
    throw ResourceError("k_max = " + std::to_string(rule.max_size) +
                        " exceeds the configured memory bound");
  }
}

}  // namespace

std::string_view to_string(ClusterStatus s) noexcept {
  switch (s) {
    case ClusterStatus::exhausted:
      return "exhausted";
    case ClusterStatus::size_capped:
      return "size-capped";
    case ClusterStatus::escaped:
      return "escaped";
  }
  return "unknown";
}

void StoppingRule::validate() const {
  if (max_size < 1) throw std::invalid_argument("k_max must be >= 1");
  if (!(escape_radius > 0.0)) throw std::invalid_argument("escape radius R_max must be > 0");
}

// --- StaticSource -----------------------------------------------------------

StaticSource::StaticSource(std::vector<Site> sites, double range)
    : sites_(std::move(sites)), range_(range), cells_(std::span<const Site>(sites_), range),
      stamp_(sites_.size(), 0), epoch_(1) {}

void StaticSource::new_epoch() {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
}

std::vector<std::uint32_t> StaticSource::slots_in(const Disk& d) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < sites_.size(); ++i) {
    if (d.contains(sites_[i].pos) && domain_.contains(sites_[i].pos)) out.push_back(i);
  }
  return out;
}

std::optional<std::uint32_t> StaticSource::slot_at(Point2 p) const {
  for (std::uint32_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i].pos == p) return i;
  }
  return std::nullopt;
}

// --- PlaneSource ------------------------------------------------------------

void PlaneSource::reset(const PoissonPlane& plane, const Domain& domain, Point2 center,
                        double half_extent, double range, std::size_t memory_limit_bytes) {
  if (!std::isfinite(half_extent) && !domain.bounded()) {
    throw ResourceError("unbounded exploration window: set a finite escape radius or size cap");
  }
  plane_ = plane;
  domain_ = domain;
  range_ = range;

  double xlo = center.x - half_extent, xhi = center.x + half_extent;
  double ylo = center.y - half_extent, yhi = center.y + half_extent;
  if (domain.bounded()) {
    const double e = domain.extent + range;
    xlo = std::max(xlo, domain.center.x - e);
    xhi = std::min(xhi, domain.center.x + e);
    ylo = std::max(ylo, domain.center.y - e);
    yhi = std::min(yhi, domain.center.y + e);
    xhi = std::max(xhi, xlo);
    yhi = std::max(yhi, ylo);
  }
  const double span_chunks = std::max(xhi - xlo, yhi - ylo) / plane.unit() + 2.0;
  if (span_chunks * span_chunks * kBytesPerChunk > static_cast<double>(memory_limit_bytes)) {
    throw ResourceError("exploration window exceeds the configured memory bound");
  }
  cx0_ = plane.chunk_of(xlo);
  cy0_ = plane.chunk_of(ylo);
  n_ = std::max(plane.chunk_of(xhi) - cx0_, plane.chunk_of(yhi) - cy0_) + 1;
  if (cx0_ < -PoissonPlane::kMaxChunk || cy0_ < -PoissonPlane::kMaxChunk ||
      cx0_ + n_ > PoissonPlane::kMaxChunk || cy0_ + n_ > PoissonPlane::kMaxChunk) {
    throw std::invalid_argument("exploration window exceeds the addressable plane");
  }

  const std::size_t cells = static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
  if (chunk_gen_.size() < cells) {
    chunk_gen_.assign(cells, 0);
    chunk_begin_.resize(cells);
    chunk_end_.resize(cells);
  }
  if (++generation_ == 0) {
    std::fill(chunk_gen_.begin(), chunk_gen_.end(), 0);
    generation_ = 1;
  }
  sites_.clear();
  stamp_.clear();
  palm_slots_.clear();
  epoch_ = 1;
  chunks_sampled_ = 0;
}

std::size_t PlaneSource::ensure_chunk(int cx, int cy) {
  const int ix = cx - cx0_;
  const int iy = cy - cy0_;
  if (ix < 0 || iy < 0 || ix >= n_ || iy >= n_) {
    throw std::logic_error("exploration left the sampled window");
  }
  const std::size_t c = static_cast<std::size_t>(iy) * static_cast<std::size_t>(n_) + ix;
  if (chunk_gen_[c] != generation_) {
    chunk_gen_[c] = generation_;
    scratch_.clear();
    plane_.sample_chunk(cx, cy, scratch_);
    chunk_begin_[c] = static_cast<std::uint32_t>(sites_.size());
    for (const Site& s : scratch_) {
      if (domain_.contains(s.pos)) sites_.push_back(s);
    }
    chunk_end_[c] = static_cast<std::uint32_t>(sites_.size());
    stamp_.resize(sites_.size(), 0);
    ++chunks_sampled_;
  }
  return c;
}

std::uint32_t PlaneSource::add_palm(const Site& s) {
  const auto slot = static_cast<std::uint32_t>(sites_.size());
  sites_.push_back(s);
  stamp_.push_back(0);
  palm_slots_.push_back(slot);
  return slot;
}

void PlaneSource::new_epoch() {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
}

std::vector<std::uint32_t> PlaneSource::slots_in(const Disk& d) {
  const int x0 = std::max(plane_.chunk_of(d.center.x - d.radius), cx0_);
  const int x1 = std::min(plane_.chunk_of(d.center.x + d.radius), cx0_ + n_ - 1);
  const int y0 = std::max(plane_.chunk_of(d.center.y - d.radius), cy0_);
  const int y1 = std::min(plane_.chunk_of(d.center.y + d.radius), cy0_ + n_ - 1);
  std::vector<std::uint32_t> out;
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      const std::size_t c = ensure_chunk(cx, cy);
      for (std::uint32_t j = chunk_begin_[c]; j < chunk_end_[c]; ++j) {
        if (d.contains(sites_[j].pos)) out.push_back(j);
      }
    }
  }
  return out;
}

// --- exploration ------------------------------------------------------------

ExploreResult explore(StaticSource& src, std::span<const std::uint32_t> seeds,
                      const ConnectionFunction& phi, const EdgeMarks& marks,
                      const ExploreLimits& limits, std::vector<std::uint32_t>& cluster,
                      const RevealTrace* trace) {
  return explore_impl(src, seeds, phi, marks, limits, cluster, trace);
}

ExploreResult explore(PlaneSource& src, std::span<const std::uint32_t> seeds,
                      const ConnectionFunction& phi, const EdgeMarks& marks,
                      const ExploreLimits& limits, std::vector<std::uint32_t>& cluster,
                      const RevealTrace* trace) {
  return explore_impl(src, seeds, phi, marks, limits, cluster, trace);
}

double growth_window(const StoppingRule& rule, double seed_radius, double range) {
  const double reach = seed_radius + static_cast<double>(rule.max_size) * range;
  return std::min(rule.escape_radius, reach) + 2.0 * range;
}

ClusterResult grow_cluster(const SeedRegion& seed, const PalmPointSet& pts,
                           const ConnectionFunction& phi, const StoppingRule& rule,
                           const GrowthOptions& options) {
  rule.validate();
  std::vector<Site> vertices = pts.vertices();
  const BoxSpec& box = pts.base.box;
  std::vector<std::uint32_t> seeds;

  if (seed.kind == SeedRegion::Kind::point) {
    auto it = std::find_if(pts.added.begin(), pts.added.end(),
                           [&](const Site& s) { return s.pos == seed.center; });
    if (it != pts.added.end()) {
      seeds.push_back(static_cast<std::uint32_t>(pts.base.size() + (it - pts.added.begin())));
    } else {
      if (!box.contains(seed.center)) {
        throw std::invalid_argument("seed point lies outside the sampling box");
      }
      seeds.push_back(static_cast<std::uint32_t>(vertices.size()));
      vertices.push_back(palm_site(static_cast<std::uint32_t>(pts.added.size()), seed.center));
    }
  } else {
    const double dx = std::max(std::abs(seed.center.x) - box.half(), 0.0);
    const double dy = std::max(std::abs(seed.center.y) - box.half(), 0.0);
    if (std::hypot(dx, dy) > seed.radius) {
      throw std::invalid_argument("seed disk does not intersect the sampling box");
    }
  }
  check_cluster_memory(rule, vertices.size(), options.memory_limit_bytes);

  StaticSource src(std::move(vertices), phi.range());
  if (seed.kind == SeedRegion::Kind::disk) seeds = src.slots_in(Disk{seed.center, seed.radius});

  ExploreLimits limits{rule.max_size, rule.escape_radius, seed.center, std::nullopt};
  std::vector<std::uint32_t> cluster;
  const ExploreResult r = explore(src, seeds, phi, EdgeMarks(pts.base.streams().edges), limits,
                                  cluster, options.trace);
  return collect(src, cluster, r);
}

ClusterResult grow_cluster(const SeedRegion& seed, const PoissonPlane& plane,
                           std::uint64_t edge_key, const ConnectionFunction& phi,
                           const StoppingRule& rule, const GrowthOptions& options) {
  PlaneSource scratch;
  return grow_cluster(seed, plane, edge_key, phi, rule, options, scratch);
}

ClusterResult grow_cluster(const SeedRegion& seed, const PoissonPlane& plane,
                           std::uint64_t edge_key, const ConnectionFunction& phi,
                           const StoppingRule& rule, const GrowthOptions& options,
                           PlaneSource& scratch) {
  rule.validate();
  const double window = growth_window(rule, seed.radius, phi.range());
  if (!std::isfinite(window)) {
    throw ResourceError("infinite-model growth needs a finite escape radius or size cap");
  }
  check_cluster_memory(rule, static_cast<std::size_t>(-1), options.memory_limit_bytes);

  PlaneSource& src = scratch;
  src.reset(plane, Domain::whole_plane(), seed.center, window, phi.range(),
            options.memory_limit_bytes);
  std::vector<std::uint32_t> seeds;
  if (seed.kind == SeedRegion::Kind::point) {
    seeds.push_back(src.add_palm(palm_site(0, seed.center)));
  } else {
    seeds = src.slots_in(Disk{seed.center, seed.radius});
  }
  ExploreLimits limits{rule.max_size, rule.escape_radius, seed.center, std::nullopt};
  std::vector<std::uint32_t> cluster;
  const ExploreResult r = explore(src, seeds, phi, EdgeMarks(edge_key), limits, cluster, options.trace);
  return collect(src, cluster, r);
}

ClusterResult grow_from_region(double K, const PointSet& pts, const ConnectionFunction& phi,
                               const StoppingRule& rule, const GrowthOptions& options) {
  if (!(K > 0.0) || !(K < pts.box.half())) {
    throw std::invalid_argument("grow_from_region: need 0 < K < s/2");
  }
  return grow_cluster(SeedRegion::disk({0.0, 0.0}, K), PalmPointSet{pts, {}}, phi, rule, options);
}

}  // namespace rcmlab
