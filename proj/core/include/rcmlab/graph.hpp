#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "rcmlab/connection.hpp"
#include "rcmlab/points.hpp"

namespace rcmlab {

/// Per-pair Bernoulli marks. The mark of {a, b} is a pure function of the
/// replicate's edge key and the unordered id pair.
class EdgeMarks {
 public:
  explicit EdgeMarks(std::uint64_t key) noexcept : key_(key) {}

  double uniform(VertexId a, VertexId b) const noexcept {
    if (a > b) std::swap(a, b);
    return to_unit(mix64(mix64(key_ ^ mix64(a)) + mix64(b + 0x9e3779b97f4a7c15ULL)));
  }

  /// Edge present iff U{a,b} < phi(d).
  bool present(VertexId a, VertexId b, double d, const ConnectionFunction& phi) const noexcept {
    const double p = phi(d);
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return uniform(a, b) < p;
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

/// Uniform grid of square cells of side `cell` over a fixed point array.
/// Only pairs in the same or adjacent cells are ever enumerated.
class CellList {
 public:
  CellList(std::span<const Point2> points, double cell);
  CellList(std::span<const Site> sites, double cell);

  double cell() const noexcept { return cell_; }
  std::size_t size() const noexcept { return points_.size(); }
  Point2 point(std::size_t i) const noexcept { return points_[i]; }

  /// f(i, j, d) for every pair i < j at distance d <= cell.
  template <class F>
  void for_each_pair(F&& f) const;

  /// f(j) for every point j within distance r <= cell of p (p itself included
  /// if it is one of the points).
  template <class F>
  void for_each_near(Point2 p, double r, F&& f) const;

 private:
  void build();
  int cell_x(double x) const noexcept;
  int cell_y(double y) const noexcept;

  std::vector<Point2> points_;
  double cell_;
  double x0_ = 0.0;
  double y0_ = 0.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::uint32_t> start_;  // CSR offsets, size nx*ny + 1
  std::vector<std::uint32_t> order_;  // point indices grouped by cell
};

/// Disjoint sets with union by size and path halving.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);

  std::uint32_t find(std::uint32_t x) noexcept {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::uint32_t a, std::uint32_t b) noexcept;
  std::uint32_t size_of(std::uint32_t x) noexcept { return size_[find(x)]; }
  std::size_t count() const noexcept { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

struct EdgeSet {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // i < j, sorted
  std::size_t vertex_count = 0;
};

struct ComponentSummary {
  std::vector<std::uint64_t> component_sizes;  // descending
  std::uint64_t L1 = 0;
  std::uint64_t L2 = 0;
  std::uint64_t num_components = 0;
  std::map<std::uint64_t, std::uint64_t> size_histogram;
  std::vector<std::uint32_t> labels;  // only when requested
};

/// All pairs within distance r of each other, i < j, sorted. Cell-list based.
std::vector<std::pair<std::uint32_t, std::uint32_t>> candidate_pairs(std::span<const Point2> points,
                                                                   double r);

/// G(X, phi) on a (Palm) point set; the edge key comes from the base set's
/// replicate streams.
EdgeSet build_edges(const PointSet& pts, const ConnectionFunction& phi);
EdgeSet build_edges(const PalmPointSet& pts, const ConnectionFunction& phi);
EdgeSet build_edges(std::span<const Site> vertices, const ConnectionFunction& phi,
                    const EdgeMarks& marks);

ComponentSummary connected_components(const EdgeSet& edges, std::size_t n, bool with_labels = false);

/// Components of G(vertices, phi) without materializing the edge list.
ComponentSummary components_of(std::span<const Site> vertices, const ConnectionFunction& phi,
                               const EdgeMarks& marks, bool with_labels = false);

/// (s^-2 L1, s^-2 L2).
std::pair<double, double> giant_fraction(const PointSet& pts, const ConnectionFunction& phi);
std::pair<double, double> giant_fraction(const PalmPointSet& pts, const ConnectionFunction& phi);

/// One "i j" line per edge, lexicographic order.
void write_edge_list(std::ostream& os, const EdgeSet& edges);

// ---------------------------------------------------------------------------

template <class F>
void CellList::for_each_pair(F&& f) const {
  const double r2 = cell_ * cell_;
  auto scan = [&](int c, int d) {
    for (std::uint32_t a = start_[c]; a < start_[c + 1]; ++a) {
      const std::uint32_t i = order_[a];
      const Point2 pi = points_[i];
      for (std::uint32_t b = (c == d ? a + 1 : start_[d]); b < start_[d + 1]; ++b) {
        const std::uint32_t j = order_[b];
        const double d2 = distance2(pi, points_[j]);
        if (d2 <= r2) {
          if (i < j) {
            f(i, j, std::sqrt(d2));
          } else {
            f(j, i, std::sqrt(d2));
          }
        }
      }
    }
  };
  for (int cy = 0; cy < ny_; ++cy) {
    for (int cx = 0; cx < nx_; ++cx) {
      const int c = cy * nx_ + cx;
      scan(c, c);
      if (cx + 1 < nx_) scan(c, c + 1);
      if (cy + 1 < ny_) {
        if (cx > 0) scan(c, c + nx_ - 1);
        scan(c, c + nx_);
        if (cx + 1 < nx_) scan(c, c + nx_ + 1);
      }
    }
  }
}

template <class F>
void CellList::for_each_near(Point2 p, double r, F&& f) const {
  const double r2 = r * r;
  const int cx = cell_x(p.x);
  const int cy = cell_y(p.y);
  for (int y = std::max(cy - 1, 0); y <= std::min(cy + 1, ny_ - 1); ++y) {
    for (int x = std::max(cx - 1, 0); x <= std::min(cx + 1, nx_ - 1); ++x) {
      const int c = y * nx_ + x;
      for (std::uint32_t a = start_[c]; a < start_[c + 1]; ++a) {
        const std::uint32_t j = order_[a];
        if (distance2(p, points_[j]) <= r2) f(j);
      }
    }
  }
}

}  // namespace rcmlab
