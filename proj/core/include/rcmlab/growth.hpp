#pragma once

// Sequential cluster growth with lazy edge revelation.
//
// Clusters are explored breadth-first (FIFO) from a seed set. The Poisson
// configuration of the current window is fixed up front (or materialized chunk
// by chunk for the plane), and the mark of a pair is revealed the first time
// the pair is queried. A pair {x, y} is only queried while x is being
// finished and y is outside the cluster, so each pair is revealed at most once.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcmlab/connection.hpp"
#include "rcmlab/graph.hpp"
#include "rcmlab/points.hpp"

namespace rcmlab {

/// Raised when a request would exceed a configured resource bound.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StoppingRule {
  std::uint64_t max_size = 10'000;
  double escape_radius = 60.0;

  static StoppingRule unlimited() noexcept {
    return {std::numeric_limits<std::uint64_t>::max(), std::numeric_limits<double>::infinity()};
  }
  void validate() const;

  friend bool operator==(const StoppingRule&, const StoppingRule&) = default;
};

enum class ClusterStatus { exhausted, size_capped, escaped };

std::string_view to_string(ClusterStatus s) noexcept;

struct ClusterResult {
  std::vector<Point2> vertices;
  std::vector<VertexId> ids;
  std::uint64_t size = 0;
  ClusterStatus status = ClusterStatus::exhausted;
  double explored_radius = 0.0;
  std::uint64_t pairs_revealed = 0;
};

/// A single (Palm) point, or all configuration points in the disk D_K(c).
struct SeedRegion {
  enum class Kind { point, disk };
  Kind kind = Kind::point;
  Point2 center;
  double radius = 0.0;

  static SeedRegion point(Point2 p) noexcept { return {Kind::point, p, 0.0}; }
  static SeedRegion disk(Point2 c, double radius) noexcept { return {Kind::disk, c, radius}; }
};

/// Called once per revealed pair: (id of finished vertex, id of candidate, distance, mark).
using RevealTrace = std::function<void(VertexId, VertexId, double, bool)>;

struct GrowthOptions {
  std::size_t memory_limit_bytes = std::size_t{1} << 30;
  const RevealTrace* trace = nullptr;
};

// ---------------------------------------------------------------------------
// Vertex sources. Slots are source-local vertex indices.

/// A fixed configuration indexed by a cell list of side range().
class StaticSource {
 public:
  StaticSource(std::vector<Site> sites, double range);

  std::size_t size() const noexcept { return sites_.size(); }
  const Site& site(std::uint32_t slot) const noexcept { return sites_[slot]; }
  std::span<const Site> sites() const noexcept { return sites_; }
  double range() const noexcept { return range_; }

  /// Confines subsequent explorations to `d` (candidates outside are skipped).
  void set_domain(const Domain& d) noexcept { domain_ = d; }
  const Domain& domain() const noexcept { return domain_; }

  /// Starts a fresh visited set.
  void new_epoch();
  bool visited(std::uint32_t slot) const noexcept { return stamp_[slot] == epoch_; }
  void visit(std::uint32_t slot) noexcept { stamp_[slot] = epoch_; }

  std::vector<std::uint32_t> slots_in(const Disk& d) const;
  std::optional<std::uint32_t> slot_at(Point2 p) const;

  template <class F>
  void for_each_candidate(std::uint32_t slot, F&& f) const {
    const Point2 p = sites_[slot].pos;
    cells_.for_each_near(p, range_, [&](std::uint32_t j) {
      if (j != slot && domain_.contains(sites_[j].pos)) f(j, distance(p, sites_[j].pos));
    });
  }

 private:
  std::vector<Site> sites_;
  double range_;
  CellList cells_;
  Domain domain_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

/// The plane process, materialized lazily over a square window of chunks
/// centred on `center`. Reusable across replicates via reset().
class PlaneSource {
 public:
  PlaneSource() = default;

  /// Prepares an empty window of half-side `half_extent` (length units).
  /// Throws ResourceError if the window would exceed `memory_limit_bytes`.
  void reset(const PoissonPlane& plane, const Domain& domain, Point2 center, double half_extent,
             double range, std::size_t memory_limit_bytes = std::size_t{1} << 30);

  std::size_t size() const noexcept { return sites_.size(); }
  const Site& site(std::uint32_t slot) const noexcept { return sites_[slot]; }
  double range() const noexcept { return range_; }
  const Domain& domain() const noexcept { return domain_; }

  /// Adds a deterministic extra vertex; it is a candidate for every query.
  std::uint32_t add_palm(const Site& s);

  void new_epoch();
  bool visited(std::uint32_t slot) const noexcept { return stamp_[slot] == epoch_; }
  void visit(std::uint32_t slot) noexcept { stamp_[slot] = epoch_; }

  /// Materializes chunks under d; returns slots of process points in d.
  std::vector<std::uint32_t> slots_in(const Disk& d);

  std::size_t chunks_sampled() const noexcept { return chunks_sampled_; }

  template <class F>
  void for_each_candidate(std::uint32_t slot, F&& f) {
    const Point2 p = sites_[slot].pos;
    const double r2 = range_ * range_;
    const int x0 = plane_.chunk_of(p.x - range_);
    const int x1 = plane_.chunk_of(p.x + range_);
    const int y0 = plane_.chunk_of(p.y - range_);
    const int y1 = plane_.chunk_of(p.y + range_);
    for (int cy = y0; cy <= y1; ++cy) {
      for (int cx = x0; cx <= x1; ++cx) {
        const std::size_t c = chunk_index(cx, cy);
        for (std::uint32_t j = chunk_begin_[c]; j < chunk_end_[c]; ++j) {
          const double d2 = distance2(p, sites_[j].pos);
          if (j != slot && d2 <= r2) f(j, std::sqrt(d2));
        }
      }
    }
    for (std::uint32_t j : palm_slots_) {
      const double d2 = distance2(p, sites_[j].pos);
      if (j != slot && d2 <= r2) f(j, std::sqrt(d2));
    }
  }

 private:
  std::size_t chunk_index(int cx, int cy) {
    const int ix = cx - cx0_;
    const int iy = cy - cy0_;
    if (ix >= 0 && iy >= 0 && ix < n_ && iy < n_) {
      const std::size_t c = static_cast<std::size_t>(iy) * static_cast<std::size_t>(n_) + ix;
      if (chunk_gen_[c] == generation_) return c;
    }
    return ensure_chunk(cx, cy);
  }
  std::size_t ensure_chunk(int cx, int cy);

  PoissonPlane plane_{0.0, 1.0, 0};
  Domain domain_;
  double range_ = 1.0;
  int cx0_ = 0;
  int cy0_ = 0;
  int n_ = 0;
  std::vector<Site> sites_;
  std::vector<std::uint32_t> palm_slots_;
  std::vector<std::uint32_t> chunk_begin_;
  std::vector<std::uint32_t> chunk_end_;
  std::vector<std::uint32_t> chunk_gen_;
  std::uint32_t generation_ = 0;
  std::vector<Site> scratch_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::size_t chunks_sampled_ = 0;
};

// ---------------------------------------------------------------------------
// Generic exploration.

struct ExploreLimits {
  std::uint64_t max_size = std::numeric_limits<std::uint64_t>::max();
  double escape_radius = std::numeric_limits<double>::infinity();
  Point2 center;
  /// Stop as soon as a vertex inside this disk joins the cluster.
  std::optional<Disk> target;
};

enum class ExploreStatus { exhausted, size_capped, escaped, target_reached };

struct ExploreResult {
  ExploreStatus status = ExploreStatus::exhausted;
  std::uint64_t pairs_revealed = 0;
  double explored_radius = 0.0;
};

/// Grows the union of clusters of `seeds` (slots not yet visited in the
/// current epoch). `cluster` receives the slots in discovery order.
ExploreResult explore(StaticSource& src, std::span<const std::uint32_t> seeds,
                      const ConnectionFunction& phi, const EdgeMarks& marks,
                      const ExploreLimits& limits, std::vector<std::uint32_t>& cluster,
                      const RevealTrace* trace = nullptr);
ExploreResult explore(PlaneSource& src, std::span<const std::uint32_t> seeds,
                      const ConnectionFunction& phi, const EdgeMarks& marks,
                      const ExploreLimits& limits, std::vector<std::uint32_t>& cluster,
                      const RevealTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Cluster growth.

/// Boxed source. A point seed must coincide with a vertex of `pts` or is added
/// as a new Palm vertex; a disk seed uses all vertices of `pts` inside it.
ClusterResult grow_cluster(const SeedRegion& seed, const PalmPointSet& pts,
                           const ConnectionFunction& phi, const StoppingRule& rule,
                           const GrowthOptions& options = {});

/// Infinite-model source: H_lambda sampled lazily, seed point added as Palm
/// point 0. Window half-side min(R_max, K + k_max * range) + 2 * range.
ClusterResult grow_cluster(const SeedRegion& seed, const PoissonPlane& plane,
                           std::uint64_t edge_key, const ConnectionFunction& phi,
                           const StoppingRule& rule, const GrowthOptions& options = {});

/// As above, reusing the windows of `scratch` across calls.
ClusterResult grow_cluster(const SeedRegion& seed, const PoissonPlane& plane,
                           std::uint64_t edge_key, const ConnectionFunction& phi,
                           const StoppingRule& rule, const GrowthOptions& options,
                           PlaneSource& scratch);

/// Union of the clusters of all points of `pts` in D_K.
ClusterResult grow_from_region(double K, const PointSet& pts, const ConnectionFunction& phi,
                               const StoppingRule& rule, const GrowthOptions& options = {});

/// Half-side of the lazily sampled window needed by a growth with these limits.
double growth_window(const StoppingRule& rule, double seed_radius, double range);

}  // namespace rcmlab
