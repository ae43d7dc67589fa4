#include "rcmlab/graph.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rcmlab {

CellList::CellList(std::span<const Point2> points, double cell)
    : points_(points.begin(), points.end()), cell_(cell) {
  build();
}

CellList::CellList(std::span<const Site> sites, double cell) : cell_(cell) {
  points_.reserve(sites.size());
  for (const Site& s : sites) points_.push_back(s.pos);
  build();
}

int CellList::cell_x(double x) const noexcept {
  return static_cast<int>(std::floor((x - x0_) / cell_));
}

int CellList::cell_y(double y) const noexcept {
  return static_cast<int>(std::floor((y - y0_) / cell_));
}

void CellList::build() {
  if (!(cell_ > 0.0) || !std::isfinite(cell_)) throw std::invalid_argument("cell side must be positive");
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("too many points for a cell list");
  }
  if (!points_.empty()) {
    double x1 = points_[0].x, y1 = points_[0].y;
    x0_ = x1;
    y0_ = y1;
    for (const Point2& p : points_) {
      x0_ = std::min(x0_, p.x);
      y0_ = std::min(y0_, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
    const double nxd = std::floor((x1 - x0_) / cell_) + 1.0;
    const double nyd = std::floor((y1 - y0_) / cell_) + 1.0;
    if (nxd * nyd > 1e9) throw std::length_error("cell grid too large");
    nx_ = static_cast<int>(nxd);
    ny_ = static_cast<int>(nyd);
  }
  const std::size_t ncells = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  start_.assign(ncells + 1, 0);
  std::vector<std::uint32_t> cell_of(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const int cx = std::min(cell_x(points_[i].x), nx_ - 1);
    const int cy = std::min(cell_y(points_[i].y), ny_ - 1);
    cell_of[i] = static_cast<std::uint32_t>(cy * nx_ + cx);
    ++start_[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < ncells; ++c) start_[c + 1] += start_[c];
  order_.resize(points_.size());
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    order_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
  for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::uint32_t>(i);
}

bool UnionFind::unite(std::uint32_t a, std::uint32_t b) noexcept {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> candidate_pairs(std::span<const Point2> points,
                                                                   double r) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  const CellList cells(points, r);
  cells.for_each_pair([&](std::uint32_t i, std::uint32_t j, double) { out.emplace_back(i, j); });
  std::sort(out.begin(), out.end());
  return out;
}

EdgeSet build_edges(std::span<const Site> vertices, const ConnectionFunction& phi,
                    const EdgeMarks& marks) {
  EdgeSet es;
  es.vertex_count = vertices.size();
  const CellList cells(vertices, phi.range());
  cells.for_each_pair([&](std::uint32_t i, std::uint32_t j, double d) {
    if (marks.present(vertices[i].id, vertices[j].id, d, phi)) es.edges.emplace_back(i, j);
  });
  std::sort(es.edges.begin(), es.edges.end());
  return es;
}

EdgeSet build_edges(const PointSet& pts, const ConnectionFunction& phi) {
  return build_edges(pts.sites, phi, EdgeMarks(pts.streams().edges));
}

EdgeSet build_edges(const PalmPointSet& pts, const ConnectionFunction& phi) {
  const std::vector<Site> v = pts.vertices();
  return build_edges(v, phi, EdgeMarks(pts.base.streams().edges));
}

namespace {

ComponentSummary summarize(UnionFind& uf, bool with_labels) {
  const std::size_t n = uf.count();
  ComponentSummary s;
  std::vector<std::uint32_t> label_of_root;
  if (with_labels) {
    s.labels.resize(n);
    label_of_root.assign(n, std::numeric_limits<std::uint32_t>::max());
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t r = uf.find(i);
    if (r == i) s.component_sizes.push_back(uf.size_of(i));
    if (with_labels) {
      if (label_of_root[r] == std::numeric_limits<std::uint32_t>::max()) {
        label_of_root[r] = static_cast<std::uint32_t>(s.num_components++);
      }
      s.labels[i] = label_of_root[r];
    }
  }
  s.num_components = s.component_sizes.size();
  std::sort(s.component_sizes.begin(), s.component_sizes.end(), std::greater<>());
  for (std::uint64_t c : s.component_sizes) ++s.size_histogram[c];
  if (!s.component_sizes.empty()) s.L1 = s.component_sizes[0];
  if (s.component_sizes.size() > 1) s.L2 = s.component_sizes[1];
  return s;
}

}  // namespace

ComponentSummary connected_components(const EdgeSet& edges, std::size_t n, bool with_labels) {
  UnionFind uf(n);
  for (const auto& [i, j] : edges.edges) {
    if (i >= n || j >= n) throw std::out_of_range("edge index exceeds vertex count");
    uf.unite(i, j);
  }
  return summarize(uf, with_labels);
}

ComponentSummary components_of(std::span<const Site> vertices, const ConnectionFunction& phi,
                               const EdgeMarks& marks, bool with_labels) {
  UnionFind uf(vertices.size());
  const CellList cells(vertices, phi.range());
  cells.for_each_pair([&](std::uint32_t i, std::uint32_t j, double d) {
    if (marks.present(vertices[i].id, vertices[j].id, d, phi)) uf.unite(i, j);
  });
  return summarize(uf, with_labels);
}

std::pair<double, double> giant_fraction(const PointSet& pts, const ConnectionFunction& phi) {
  const ComponentSummary c = components_of(pts.sites, phi, EdgeMarks(pts.streams().edges));
  const double area = pts.box.area();
  return {static_cast<double>(c.L1) / area, static_cast<double>(c.L2) / area};
}

std::pair<double, double> giant_fraction(const PalmPointSet& pts, const ConnectionFunction& phi) {
  const std::vector<Site> v = pts.vertices();
  const ComponentSummary c = components_of(v, phi, EdgeMarks(pts.base.streams().edges));
  const double area = pts.base.box.area();
  return {static_cast<double>(c.L1) / area, static_cast<double>(c.L2) / area};
}

void write_edge_list(std::ostream& os, const EdgeSet& edges) {
  for (const auto& [i, j] : edges.edges) os << i << ' ' << j << '\n';
}

}  // namespace rcmlab
