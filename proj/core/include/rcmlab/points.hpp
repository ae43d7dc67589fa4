#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rcmlab/geometry.hpp"
#include "rcmlab/rng.hpp"

namespace rcmlab {

/// Stable identity of a vertex. Poisson points encode (chunk, batch, index);
/// Palm points carry kPalmTag. Edge marks are keyed by ids, never by list
/// position, so they do not depend on enumeration order.
using VertexId = std::uint64_t;
inline constexpr VertexId kPalmTag = VertexId{1} << 63;

constexpr VertexId palm_id(std::uint32_t k) noexcept { return kPalmTag | k; }
constexpr bool is_palm(VertexId id) noexcept { return (id & kPalmTag) != 0; }

struct Site {
  Point2 pos;
  VertexId id = 0;
  /// Position in the monotone coupling over intensities: the site belongs to
  /// the process at intensity lambda iff arrival < lambda * unit^2.
  double arrival = 0.0;
};

/// Homogeneous Poisson process on the whole plane, sampled lazily chunk by
/// chunk. Chunks are squares of side `unit` (the connection range); each chunk
/// holds independent unit-mean batches b = 0, 1, ... with uniform marks, and a
/// site is kept iff b + mark < lambda * unit^2. This gives the exact Poisson
/// law at every intensity, nests the processes across intensities, and makes
/// the process for (range c, lambda / c^2) an exact c-scaled copy.
class PoissonPlane {
 public:
  static constexpr int kMaxChunk = (1 << 18) - 1;

  PoissonPlane(double lambda, double unit, std::uint64_t stream_key);

  double lambda() const noexcept { return lambda_; }
  double unit() const noexcept { return unit_; }
  std::uint64_t key() const noexcept { return key_; }

  /// Appends the sites of chunk (cx, cy), covering [cx, cx+1) x [cy, cy+1) in units.
  void sample_chunk(int cx, int cy, std::vector<Site>& out) const;

  /// Chunk index containing coordinate v (length units).
  int chunk_of(double v) const noexcept { return static_cast<int>(std::floor(v / unit_)); }

 private:
  double lambda_;
  double unit_;
  double scaled_lambda_;
  int batches_;
  std::uint64_t key_;
};

/// A Poisson configuration in B(s) with its provenance.
struct PointSet {
  std::vector<Site> sites;
  BoxSpec box{1.0};
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  double unit = 1.0;

  std::size_t size() const noexcept { return sites.size(); }
  ReplicateStreams streams() const noexcept { return {seed, replicate}; }
};

/// Base configuration plus up to two deterministic extra vertices (the origin,
/// or uniform points V_s, W_s). Vertex order: base sites, then added sites.
struct PalmPointSet {
  PointSet base;
  std::vector<Site> added;

  std::size_t size() const noexcept { return base.size() + added.size(); }
  const Site& vertex(std::size_t i) const noexcept {
    return i < base.size() ? base.sites[i] : added[i - base.size()];
  }
  std::vector<Site> vertices() const;
};

/// H_{lambda,s}: the plane process restricted to B(s). Deterministic in
/// (lambda, side, seed, replicate, unit); rejects negative or non-finite input.
PointSet sample_points(double lambda, const BoxSpec& box, std::uint64_t seed,
                       std::uint64_t replicate, double unit = 1.0);

/// Sites of the plane process lying in `domain` (which must be bounded).
std::vector<Site> sample_region(const PoissonPlane& plane, const Domain& domain);

/// Adds the origin as Palm point 0.
PalmPointSet with_origin(PointSet base);

/// Adds `count` (1 or 2) independent uniform points of B(s) as Palm points,
/// drawn from the replicate's palm stream.
PalmPointSet with_uniform_points(PointSet base, int count);

/// Palm site k at position p.
inline Site palm_site(std::uint32_t k, Point2 p) noexcept { return {p, palm_id(k), 0.0}; }

/// Uniform point of B(s) number k from a palm stream key.
Point2 uniform_in_box(const BoxSpec& box, std::uint64_t palm_key, std::uint32_t k) noexcept;

}  // namespace rcmlab
